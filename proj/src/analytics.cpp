#include "chainview/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace chainview {

namespace {

std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string out;
  while (u) {
    out.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

ResultTable::Cell num(std::string text) { return {std::move(text), true}; }
ResultTable::Cell str(std::string text) { return {std::move(text), false}; }

}  // namespace

std::string render_ratio(__int128 num, __int128 den, int decimals) {
  if (den <= 0) throw Error(Errc::Precondition, "ratio with non-positive denominator");
  __int128 scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const bool neg = num < 0;
  const __int128 a = neg ? -num : num;
  const __int128 scaled = (a * scale * 2 + den) / (den * 2);  // half away from zero
  const __int128 whole = scaled / scale;
  const __int128 frac = scaled % scale;
  std::string out = (neg && scaled != 0 ? "-" : "") + int128_to_string(whole);
  if (decimals > 0) {
    std::string f = int128_to_string(frac);
    out += '.';
    out.append(static_cast<std::size_t>(decimals) - f.size(), '0');
    out += f;
  }
  return out;
}

// Average inputs/outputs ----------------------------------------------------------

void AvgIoAccumulator::add(const BasicRecord& record) {
  auto& row = by_date_[record.date];
  row.date = record.date;
  ++row.txs;
  row.inputs += record.inputs.size();
  row.outputs += record.outputs.size();
}

void AvgIoAccumulator::merge(const AvgIoAccumulator& other) {
  for (const auto& [date, r] : other.by_date_) {
    auto& row = by_date_[date];
    row.date = date;
    row.txs += r.txs;
    row.inputs += r.inputs;
    row.outputs += r.outputs;
  }
}

std::vector<AvgIoRow> AvgIoAccumulator::result() const {
  std::vector<AvgIoRow> out;
  out.reserve(by_date_.size());
  for (const auto& [date, row] : by_date_) out.push_back(row);
  return out;
}

std::vector<AvgIoRow> avg_io_by_date(std::span<const BasicRecord> records) {
  AvgIoAccumulator acc;
  for (const auto& r : records) acc.add(r);
  return acc.result();
}

// Protocols ------------------------------------------------------------------------

void ProtocolAccumulator::merge(const ProtocolAccumulator& other) {
  for (const auto& [name, n] : other.counts_) counts_[name] += n;
}

std::vector<ProtocolCount> ProtocolAccumulator::result(std::uint64_t min_count) const {
  std::vector<ProtocolCount> out;
  for (const auto& [name, n] : counts_) {
    if (n > min_count) out.push_back(ProtocolCount{name, n});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ProtocolCount& a, const ProtocolCount& b) { return a.count > b.count; });
  return out;
}

std::vector<ProtocolCount> protocol_counts(std::span<const OpReturnRecord> records,
                                           std::uint64_t min_count) {
  ProtocolAccumulator acc;
  for (const auto& r : records) acc.add(r);
  return acc.result(min_count);
}

// Rate buckets ---------------------------------------------------------------------

std::string BucketRow::avg_btc() const {
  if (count == 0) return {};
  return render_ratio(output_sum, static_cast<__int128>(count) * kCoin, 8);
}

BucketAccumulator::BucketAccumulator(std::int64_t bucket_width_usd, std::uint32_t n_buckets)
    : width_(bucket_width_usd), n_(n_buckets) {
  if (width_ <= 0 || n_ == 0) {
    throw Error(Errc::Precondition, "bucket width and count must be positive");
  }
  for (std::uint32_t k = 0; k < n_; ++k) {
    rows_.push_back(BucketRow{std::to_string(k * width_) + "-" + std::to_string((k + 1) * width_)});
  }
  rows_.push_back(BucketRow{">=" + std::to_string(n_ * width_)});
}

std::uint32_t BucketAccumulator::bucket_of(Rate rate) const {
  if (rate.units() < 0) return n_;
  const std::int64_t k = rate.units() / (width_ * Rate::kScale);
  return k >= static_cast<std::int64_t>(n_) ? n_ : static_cast<std::uint32_t>(k);
}

void BucketAccumulator::add(const RatesRecord& record) {
  auto& row = rows_[bucket_of(record.rate)];
  ++row.count;
  row.output_sum += record.outputSum;
}

void BucketAccumulator::merge(const BucketAccumulator& other) {
  if (other.width_ != width_ || other.n_ != n_) {
    throw Error(Errc::Precondition, "merging bucket accumulators with different layouts");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    rows_[i].count += other.rows_[i].count;
    rows_[i].output_sum += other.rows_[i].output_sum;
  }
}

BucketResult BucketAccumulator::result() const {
  BucketResult out;
  out.buckets.assign(rows_.begin(), rows_.begin() + n_);
  if (rows_.back().count > 0) {
    out.overflow = rows_.back();
    out.warnings.push_back(Warning{Errc::RangeError,
                                   std::to_string(rows_.back().count) +
                                       " records with rate outside [0, " +
                                       std::to_string(n_ * width_) + ") put in overflow bucket",
                                   std::nullopt});
  }
  return out;
}

BucketResult avg_output_by_rate_bucket(std::span<const RatesRecord> records,
                                       std::int64_t bucket_width_usd, std::uint32_t n_buckets) {
  BucketAccumulator acc(bucket_width_usd, n_buckets);
  for (const auto& r : records) acc.add(r);
  return acc.result();
}

// Whales ---------------------------------------------------------------------------

std::int64_t fee_usd_units(std::int64_t fee_satoshi, Rate rate) {
  const __int128 p = static_cast<__int128>(fee_satoshi) * rate.units();
  const bool neg = p < 0;
  const __int128 a = neg ? -p : p;
  const __int128 q = (a + kCoin / 2) / kCoin;
  return static_cast<std::int64_t>(neg ? -q : q);
}

WhaleStats whale_stats(std::span<const long double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "no records to compute whale statistics");
  std::vector<long double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  long double sum = 0;
  for (long double v : sorted) sum += v;
  WhaleStats s;
  const auto n = static_cast<long double>(sorted.size());
  s.mean = sum / n;
  long double sq = 0;
  for (long double v : sorted) sq += (v - s.mean) * (v - s.mean);
  s.sigma = std::sqrt(sq / n);
  s.threshold = s.mean + 2 * s.sigma;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > s.threshold) s.whales.push_back(i);
  }
  return s;
}

WhaleResult whale_transactions(std::span<const FeesRecord> records,
                               const std::unordered_set<std::string>* exclude) {
  std::vector<const FeesRecord*> kept;
  std::vector<std::int64_t> units;
  for (const auto& r : records) {
    if (exclude && exclude->contains(r.txHash)) continue;
    kept.push_back(&r);
    units.push_back(fee_usd_units(r.fee, r.rate));
  }
  if (kept.empty()) throw Error(Errc::EmptyInput, "no fee records after filtering");

  // Mean from the exact integer sum; sigma from whale_stats' order-free pass.
  __int128 exact = 0;
  for (auto u : units) exact += u;
  std::vector<long double> values(units.begin(), units.end());
  WhaleStats s = whale_stats(values);
  const long double mean =
      static_cast<long double>(exact) / static_cast<long double>(units.size());
  s.threshold = mean + 2 * s.sigma;

  WhaleResult out;
  out.n = kept.size();
  out.mean_usd = mean / kCoin;
  out.sigma_usd = s.sigma / kCoin;
  out.threshold_usd = s.threshold / kCoin;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (static_cast<long double>(units[i]) > s.threshold) {
      out.whales.push_back(Whale{*kept[i], units[i]});
    }
  }
  std::sort(out.whales.begin(), out.whales.end(), [](const Whale& a, const Whale& b) {
    if (a.fee_usd != b.fee_usd) return a.fee_usd > b.fee_usd;
    return a.record.txHash < b.record.txHash;
  });
  return out;
}

std::unordered_set<std::string> coinbase_txids(std::span<const FeesRecord> records) {
  std::unordered_set<std::string> blocks;
  std::unordered_set<std::string> out;
  for (const auto& r : records) {
    if (blocks.insert(r.blockHash).second) out.insert(r.txHash);
  }
  return out;
}

// Tagged payments per day ----------------------------------------------------------

void TagDailyAccumulator::add(const TagsRecord& record) {
  if (!record.tag.starts_with(prefix_)) return;
  txs_[record.date].insert(record.txHash);
}

void TagDailyAccumulator::merge(const TagDailyAccumulator& other) {
  for (const auto& [date, set] : other.txs_) txs_[date].insert(set.begin(), set.end());
}

std::vector<DailyCount> TagDailyAccumulator::result() const {
  std::vector<DailyCount> out;
  for (const auto& [date, set] : txs_) out.push_back(DailyCount{date, set.size()});
  return out;
}

std::vector<DailyCount> daily_tx_to_tag_prefix(std::span<const TagsRecord> records,
                                               std::string_view prefix) {
  TagDailyAccumulator acc{std::string(prefix)};
  for (const auto& r : records) acc.add(r);
  return acc.result();
}

// Rendering ------------------------------------------------------------------------

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "jsonl") return OutputFormat::Jsonl;
  throw Error(Errc::ParseError, "unknown format '" + std::string(name) + "'");
}

std::string ResultTable::render(OutputFormat format) const {
  std::string out;
  if (format == OutputFormat::Csv) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(columns[i]);
    }
    out += "\r\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(row[i].text);
      }
      out += "\r\n";
    }
    return out;
  }
  for (const auto& row : rows) {
    out += '{';
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += nlohmann::json(columns[i]).dump();
      out += ':';
      if (!row[i].numeric) {
        out += nlohmann::json(row[i].text).dump();
      } else if (row[i].text.empty()) {
        out += "null";
      } else {
        out += row[i].text;
      }
    }
    out += "}\n";
  }
  return out;
}

std::string render_usd(long double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*Lf", decimals, value);
  return buf;
}

ResultTable to_table(std::span<const AvgIoRow> rows) {
  ResultTable t{{"date", "avg_in", "avg_out"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({str(r.date.to_string()), num(r.avg_inputs()), num(r.avg_outputs())});
  }
  return t;
}

ResultTable to_table(std::span<const ProtocolCount> rows) {
  ResultTable t{{"protocol", "count"}, {}};
  for (const auto& r : rows) t.rows.push_back({str(r.protocol), num(std::to_string(r.count))});
  return t;
}

ResultTable to_table(const BucketResult& result) {
  ResultTable t{{"bucket", "avg_output_btc", "count"}, {}};
  auto add = [&](const BucketRow& r) {
    t.rows.push_back({str(r.label), num(r.avg_btc()), num(std::to_string(r.count))});
  };
  for (const auto& r : result.buckets) add(r);
  if (result.overflow) add(*result.overflow);
  return t;
}

ResultTable to_table(const WhaleResult& result) {
  ResultTable t{{"blockHash", "txHash", "fee", "date", "rate", "fee_usd"}, {}};
  for (const auto& w : result.whales) {
    t.rows.push_back({str(w.record.blockHash), str(w.record.txHash),
                      num(std::to_string(w.record.fee)), str(w.record.date.to_string()),
                      num(w.record.rate.to_string()), num(render_ratio(w.fee_usd, kCoin, 8))});
  }
  return t;
}

ResultTable to_table(std::span<const DailyCount> rows) {
  ResultTable t{{"date", "count"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({str(r.date.to_string()), num(std::to_string(r.count))});
  }
  return t;
}

}  // namespace chainview
