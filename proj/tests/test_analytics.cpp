#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "chainview/analytics.hpp"
#include "chainview/chaingen.hpp"
#include "chainview/parser.hpp"

using namespace chainview;

namespace {

BasicRecord io_record(const std::string& id, const char* date, int n_in, int n_out) {
  BasicRecord r;
  r.txHash = id;
  r.blockHash = std::string(64, 'b');
  r.date = Date::parse(date);
  r.inputs.resize(n_in);
  r.outputs.resize(n_out);
  return r;
}

FeesRecord fee_record(int i, std::int64_t fee, const char* rate, int block = 0) {
  return FeesRecord{"block" + std::to_string(block), "tx" + std::to_string(i), fee,
                    Date::parse("2017-01-01"), Rate::parse(rate)};
}

template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(v.begin(), v.end(), rng);
}

}  // namespace

TEST(RenderRatio, RoundsHalfAwayFromZero) {
  EXPECT_EQ(render_ratio(2, 1, 6), "2.000000");
  EXPECT_EQ(render_ratio(1, 3, 6), "0.333333");
  EXPECT_EQ(render_ratio(2, 3, 6), "0.666667");
  EXPECT_EQ(render_ratio(1, 8, 2), "0.13");
  EXPECT_EQ(render_ratio(-1, 8, 2), "-0.13");
  EXPECT_EQ(render_ratio(5, 1, 0), "5");
  EXPECT_EQ(render_ratio(150000000, 100000000, 8), "1.50000000");
}

TEST(AvgIo, SpecExampleAndEmpty) {
  const std::vector<BasicRecord> recs = {io_record("a", "2017-01-01", 1, 2),
                                         io_record("b", "2017-01-01", 3, 2)};
  const auto rows = avg_io_by_date(recs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].avg_inputs(), "2.000000");
  EXPECT_EQ(rows[0].avg_outputs(), "2.000000");
  EXPECT_TRUE(avg_io_by_date(std::vector<BasicRecord>{}).empty());
}

// Two-pass oracle straight from raw blocks: first collect per-date totals from
// the parsed transactions, then divide.
TEST(AvgIo, MatchesRawBlockOracle) {
  GenSpec spec;
  spec.seed = 9;
  spec.n_blocks = 300;
  spec.time_step = 3 * 3600;
  const auto chain = generate(spec);

  std::map<Date, std::array<std::uint64_t, 3>> totals;
  std::vector<BasicRecord> recs;
  for (const auto& raw : chain.blocks) {
    const Block b = parse_block(raw);
    const Date d = date_of(b.header.time);
    for (const auto& tx : b.txs) {
      auto& t = totals[d];
      ++t[0];
      t[1] += tx.inputs.size();
      t[2] += tx.outputs.size();
      recs.push_back(io_record(tx.txid.to_display_hex(), "2000-01-01", tx.inputs.size(),
                               tx.outputs.size()));
      recs.back().date = d;
    }
  }
  const auto rows = avg_io_by_date(recs);
  ASSERT_EQ(rows.size(), totals.size());
  std::size_t i = 0;
  for (const auto& [date, t] : totals) {
    EXPECT_EQ(rows[i].date, date);
    EXPECT_EQ(rows[i].txs, t[0]);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(t[1]) / t[0]);
    EXPECT_EQ(rows[i].avg_inputs(), buf);
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(t[2]) / t[0]);
    EXPECT_EQ(rows[i].avg_outputs(), buf);
    ++i;
  }
  // Also matches the generator's own per-date tallies.
  ASSERT_EQ(chain.truth.dates.size(), rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].inputs, chain.truth.dates[k].inputs);
    EXPECT_EQ(rows[k].outputs, chain.truth.dates[k].outputs);
  }

  shuffle(recs, 4);
  EXPECT_EQ(avg_io_by_date(recs), rows);

  AvgIoAccumulator left, right;
  for (std::size_t k = 0; k < recs.size(); ++k) (k % 3 ? left : right).add(recs[k]);
  left.merge(right);
  EXPECT_EQ(left.result(), rows);
}

TEST(Protocols, StrictThresholdBoundary) {
  std::vector<OpReturnRecord> recs;
  for (int i = 0; i < 1000; ++i) recs.push_back({"t", Date(0), "omni", ""});
  EXPECT_TRUE(protocol_counts(recs, 1000).empty());
  recs.push_back({"t", Date(0), "omni", ""});
  const auto rows = protocol_counts(recs, 1000);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], (ProtocolCount{"omni", 1001}));
}

TEST(Protocols, MatchesBruteForceCount) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> names = {"omni", "colu", "unknown", "blockstore", "ew"};
  std::vector<OpReturnRecord> recs;
  std::map<std::string, std::uint64_t> oracle;
  for (int i = 0; i < 5000; ++i) {
    const std::string& p = names[rng() % (i % 2 ? 2 : names.size())];
    recs.push_back({"t" + std::to_string(i), Date(0), p, ""});
    ++oracle[p];
  }
  const auto rows = protocol_counts(recs, 10);
  std::vector<ProtocolCount> expected;
  for (const auto& [p, c] : oracle) {
    if (c > 10) expected.push_back({p, c});
  }
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
    return a.count != b.count ? a.count > b.count : a.protocol < b.protocol;
  });
  EXPECT_EQ(rows, expected);
  shuffle(recs, 8);
  EXPECT_EQ(protocol_counts(recs, 10), expected);
}

TEST(Buckets, LabelsAndHalfOpenBoundaries) {
  BucketAccumulator acc;
  EXPECT_EQ(acc.bucket_of(Rate::parse("1550")), 5u);
  EXPECT_EQ(acc.bucket_of(Rate::parse("300")), 1u);
  EXPECT_EQ(acc.bucket_of(Rate::parse("299.99999999")), 0u);
  EXPECT_EQ(acc.bucket_of(Rate::parse("0")), 0u);
  EXPECT_EQ(acc.bucket_of(Rate::parse("2100")), 7u);

  const auto result = avg_output_by_rate_bucket(std::vector<RatesRecord>{});
  std::vector<std::string> labels;
  for (const auto& b : result.buckets) labels.push_back(b.label);
  EXPECT_EQ(labels, (std::vector<std::string>{"0-300", "300-600", "600-900", "900-1200",
                                              "1200-1500", "1500-1800", "1800-2100"}));
  EXPECT_FALSE(result.overflow);
  EXPECT_EQ(result.buckets[0].avg_btc(), "");
}

TEST(Buckets, OverflowWarns) {
  const std::vector<RatesRecord> recs = {{"a", Date(0), 100, Rate::parse("2500")},
                                         {"b", Date(0), 300, Rate::parse("10")}};
  const auto r = avg_output_by_rate_bucket(recs);
  ASSERT_TRUE(r.overflow);
  EXPECT_EQ(r.overflow->label, ">=2100");
  EXPECT_EQ(r.overflow->count, 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].code, Errc::RangeError);
  EXPECT_EQ(r.buckets[0].avg_btc(), "0.00000300");
}

TEST(Buckets, MatchesBruteForceMeans) {
  std::mt19937_64 rng(12);
  std::vector<RatesRecord> recs;
  for (int i = 0; i < 4000; ++i) {
    const std::int64_t rate_units = static_cast<std::int64_t>(rng() % 210'000'000'000ULL);
    recs.push_back({"t" + std::to_string(i), Date(0),
                    static_cast<std::int64_t>(rng() % 5'000'000'000ULL),
                    Rate::from_units(rate_units)});
  }
  // Oracle: filter per bucket by explicit bounds, sum, divide with long division.
  const auto result = avg_output_by_rate_bucket(recs);
  for (int k = 0; k < 7; ++k) {
    const std::int64_t lo = k * 300LL * kCoin, hi = (k + 1) * 300LL * kCoin;
    std::int64_t sum = 0, n = 0;
    for (const auto& r : recs) {
      if (r.rate.units() >= lo && r.rate.units() < hi) {
        sum += r.outputSum;
        ++n;
      }
    }
    ASSERT_GT(n, 0);
    // Mean in satoshi, rounded half up to an integer, printed as BTC.
    const std::int64_t q = sum / n, rem = sum % n;
    const std::int64_t sat = q + (2 * rem >= n ? 1 : 0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%lld.%08lld", static_cast<long long>(sat / kCoin),
                  static_cast<long long>(sat % kCoin));
    EXPECT_EQ(result.buckets[k].avg_btc(), buf) << k;
    EXPECT_EQ(result.buckets[k].count, static_cast<std::uint64_t>(n));
  }
  shuffle(recs, 2);
  EXPECT_EQ(avg_output_by_rate_bucket(recs).buckets, result.buckets);

  BucketAccumulator a, b;
  for (std::size_t i = 0; i < recs.size(); ++i) (i < 1234 ? a : b).add(recs[i]);
  a.merge(b);
  EXPECT_EQ(a.result().buckets, result.buckets);
}

TEST(Whales, FeeUsdUnits) {
  EXPECT_EQ(fee_usd_units(100'000'000, Rate::parse("997.75")), 99'775'000'000);
  EXPECT_EQ(fee_usd_units(1, Rate::parse("0.5")), 1);  // 0.5 rounds up
  EXPECT_EQ(fee_usd_units(0, Rate::parse("1000")), 0);
}

// One large fee among zeros at 1 USD/BTC gives mean 0.41, sigma 12.09 and a
// threshold of 24.58 after rounding to cents.
TEST(Whales, ReferenceDistribution) {
  std::vector<FeesRecord> recs;
  recs.push_back(fee_record(0, 35'980'000'000, "1"));
  for (int i = 1; i < 885; ++i) recs.push_back(fee_record(i, 0, "1"));
  const WhaleResult r = whale_transactions(recs);
  EXPECT_EQ(render_usd(r.mean_usd), "0.41");
  EXPECT_EQ(render_usd(r.sigma_usd), "12.09");
  EXPECT_EQ(render_usd(r.threshold_usd), "24.58");
  EXPECT_NEAR(static_cast<double>(r.threshold_usd - (r.mean_usd + 2 * r.sigma_usd)), 0.0, 1e-9);
  ASSERT_EQ(r.whales.size(), 1u);
  EXPECT_EQ(r.whales[0].record.txHash, "tx0");
}

TEST(Whales, DegenerateEqualFees) {
  std::vector<FeesRecord> recs;
  for (int i = 0; i < 50; ++i) recs.push_back(fee_record(i, 12345, "1000"));
  const WhaleResult r = whale_transactions(recs);
  EXPECT_EQ(r.sigma_usd, 0);
  EXPECT_EQ(r.threshold_usd, r.mean_usd);
  EXPECT_TRUE(r.whales.empty());
}

TEST(Whales, EmptyInput) {
  try {
    whale_transactions(std::vector<FeesRecord>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyInput);
  }
  EXPECT_THROW(whale_stats(std::vector<long double>{}), Error);
}

TEST(Whales, BruteForceMembershipScaleAndOrder) {
  std::mt19937_64 rng(77);
  std::lognormal_distribution<double> fee_dist(8.0, 2.0);
  std::vector<FeesRecord> recs;
  for (int i = 0; i < 3000; ++i) {
    const auto fee = static_cast<std::int64_t>(fee_dist(rng));
    const std::int64_t rate = 1 + static_cast<std::int64_t>(rng() % 2000);
    recs.push_back(FeesRecord{"b", "tx" + std::to_string(i), fee, Date(0),
                              Rate::from_units(rate * kCoin)});
  }
  const WhaleResult r = whale_transactions(recs);

  // Oracle in plain double arithmetic on USD values.
  std::vector<double> usd;
  for (const auto& rec : recs) usd.push_back(rec.fee / 1e8 * (rec.rate.units() / 1e8));
  double mean = 0;
  for (double v : usd) mean += v;
  mean /= usd.size();
  double var = 0;
  for (double v : usd) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / usd.size());
  const double threshold = mean + 2 * sigma;
  std::set<std::string> expected;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (usd[i] > threshold) expected.insert(recs[i].txHash);
  }
  std::set<std::string> got;
  for (const auto& w : r.whales) got.insert(w.record.txHash);
  EXPECT_EQ(got, expected);
  EXPECT_FALSE(got.empty());
  EXPECT_NEAR(static_cast<double>(r.mean_usd), mean, 1e-9 * std::max(1.0, mean));
  EXPECT_NEAR(static_cast<double>(r.sigma_usd), sigma, 1e-9 * std::max(1.0, sigma));
  for (std::size_t i = 1; i < r.whales.size(); ++i) {
    EXPECT_GE(r.whales[i - 1].fee_usd, r.whales[i].fee_usd);
  }

  // Scaling every fee by 3 scales the statistics and keeps membership.
  std::vector<FeesRecord> scaled = recs;
  for (auto& rec : scaled) rec.fee *= 3;
  const WhaleResult s = whale_transactions(scaled);
  EXPECT_NEAR(static_cast<double>(s.mean_usd / r.mean_usd), 3.0, 1e-12);
  EXPECT_NEAR(static_cast<double>(s.sigma_usd / r.sigma_usd), 3.0, 1e-12);
  EXPECT_NEAR(static_cast<double>(s.threshold_usd / r.threshold_usd), 3.0, 1e-12);
  std::set<std::string> scaled_ids;
  for (const auto& w : s.whales) scaled_ids.insert(w.record.txHash);
  EXPECT_EQ(scaled_ids, got);

  std::vector<FeesRecord> shuffled = recs;
  shuffle(shuffled, 5);
  const WhaleResult o = whale_transactions(shuffled);
  EXPECT_EQ(o.mean_usd, r.mean_usd);
  EXPECT_EQ(o.sigma_usd, r.sigma_usd);
  ASSERT_EQ(o.whales.size(), r.whales.size());
  for (std::size_t i = 0; i < o.whales.size(); ++i) {
    EXPECT_EQ(o.whales[i].record, r.whales[i].record);
  }
}

TEST(Whales, ExcludeCoinbaseRows) {
  const std::vector<FeesRecord> recs = {fee_record(0, 0, "1", 0), fee_record(1, 500, "1", 0),
                                        fee_record(2, 0, "1", 1), fee_record(3, 700, "1", 1)};
  const auto cb = coinbase_txids(recs);
  EXPECT_EQ(cb, (std::unordered_set<std::string>{"tx0", "tx2"}));
  const WhaleResult r = whale_transactions(recs, &cb);
  EXPECT_EQ(r.n, 2u);
  EXPECT_EQ(render_usd(r.mean_usd, 8), "0.00000600");
}

TEST(TagDaily, DistinctTxPerDate) {
  const std::vector<TagsRecord> recs = {
      {"t1", Date::parse("2017-01-01"), 1, "a1", "SatoshiDICE A"},
      {"t1", Date::parse("2017-01-01"), 1, "a2", "SatoshiDICE B"},
      {"t2", Date::parse("2017-01-01"), 1, "a3", "satoshidice lower"},
      {"t3", Date::parse("2017-01-02"), 1, "a1", "SatoshiDICE A"},
  };
  const auto rows = daily_tx_to_tag_prefix(recs, "SatoshiDICE");
  EXPECT_EQ(rows, (std::vector<DailyCount>{{Date::parse("2017-01-01"), 1},
                                           {Date::parse("2017-01-02"), 1}}));
  EXPECT_TRUE(daily_tx_to_tag_prefix(recs, "WikiLeaks").empty());
}

TEST(TagDaily, MatchesBruteForceDistinctCount) {
  std::mt19937_64 rng(6);
  const std::vector<std::string> tags = {"SatoshiDICE 48%", "SatoshiDICE 95%", "WikiLeaks"};
  std::vector<TagsRecord> recs;
  for (int i = 0; i < 3000; ++i) {
    recs.push_back({"t" + std::to_string(rng() % 800), Date(17000 + rng() % 20), 1, "x",
                    tags[rng() % tags.size()]});
  }
  std::map<Date, std::set<std::string>> oracle;
  for (const auto& r : recs) {
    if (r.tag.rfind("SatoshiDICE", 0) == 0) oracle[r.date].insert(r.txHash);
  }
  std::vector<DailyCount> expected;
  for (const auto& [d, s] : oracle) expected.push_back({d, s.size()});
  EXPECT_EQ(daily_tx_to_tag_prefix(recs, "SatoshiDICE"), expected);

  TagDailyAccumulator a("SatoshiDICE"), b("SatoshiDICE");
  for (std::size_t i = 0; i < recs.size(); ++i) (i % 2 ? a : b).add(recs[i]);
  a.merge(b);
  EXPECT_EQ(a.result(), expected);
}

TEST(Rendering, CsvAndJsonl) {
  const std::vector<AvgIoRow> rows = {{Date::parse("2017-01-01"), 2, 4, 3}};
  const ResultTable t = to_table(rows);
  EXPECT_EQ(t.render(OutputFormat::Csv), "date,avg_in,avg_out\r\n2017-01-01,2.000000,1.500000\r\n");
  const auto doc = nlohmann::json::parse(t.render(OutputFormat::Jsonl));
  EXPECT_EQ(doc["date"], "2017-01-01");
  EXPECT_TRUE(doc["avg_in"].is_number());

  const auto buckets = to_table(avg_output_by_rate_bucket(std::vector<RatesRecord>{}));
  EXPECT_EQ(buckets.columns, (std::vector<std::string>{"bucket", "avg_output_btc", "count"}));
  const std::string jsonl = buckets.render(OutputFormat::Jsonl);
  EXPECT_TRUE(nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')))["avg_output_btc"].is_null());
  EXPECT_EQ(parse_output_format("csv"), OutputFormat::Csv);
  EXPECT_THROW(parse_output_format("xml"), Error);
}
