#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chainview/views.hpp"

namespace chainview {

// All aggregations accumulate in integers and convert to decimal text only
// when rendered, so merging partial accumulators gives the sequential result.

/// num/den rounded half away from zero to `decimals` places. den must be > 0.
std::string render_ratio(__int128 num, __int128 den, int decimals);

// Average inputs/outputs per date ------------------------------------------------

struct AvgIoRow {
  Date date;
  std::uint64_t txs = 0;
  std::uint64_t inputs = 0;
  std::uint64_t outputs = 0;

  std::string avg_inputs() const { return render_ratio(inputs, txs, 6); }
  std::string avg_outputs() const { return render_ratio(outputs, txs, 6); }
  friend bool operator==(const AvgIoRow&, const AvgIoRow&) = default;
};

class AvgIoAccumulator {
 public:
  void add(const BasicRecord& record);
  void merge(const AvgIoAccumulator& other);
  /// Ascending by date.
  std::vector<AvgIoRow> result() const;

 private:
  std::map<Date, AvgIoRow> by_date_;
};

std::vector<AvgIoRow> avg_io_by_date(std::span<const BasicRecord> records);

// OP_RETURN protocols -----------------------------------------------------------

struct ProtocolCount {
  std::string protocol;
  std::uint64_t count = 0;
  friend bool operator==(const ProtocolCount&, const ProtocolCount&) = default;
};

class ProtocolAccumulator {
 public:
  void add(const OpReturnRecord& record) { ++counts_[record.protocol]; }
  void merge(const ProtocolAccumulator& other);
  /// Protocols with count > min_count, descending by count, ties by name.
  std::vector<ProtocolCount> result(std::uint64_t min_count) const;

 private:
  std::map<std::string, std::uint64_t> counts_;
};

std::vector<ProtocolCount> protocol_counts(std::span<const OpReturnRecord> records,
                                           std::uint64_t min_count = 1000);

// Output value by exchange-rate bucket --------------------------------------------

struct BucketRow {
  std::string label;  // "0-300", or ">=2100" for the overflow bucket
  std::uint64_t count = 0;
  __int128 output_sum = 0;  // satoshi

  /// Mean outputSum in BTC with 8 decimals; empty when the bucket is empty.
  std::string avg_btc() const;
  friend bool operator==(const BucketRow&, const BucketRow&) = default;
};

struct BucketResult {
  std::vector<BucketRow> buckets;  // n_buckets entries, ascending
  std::optional<BucketRow> overflow;
  Warnings warnings;
};

class BucketAccumulator {
 public:
  BucketAccumulator(std::int64_t bucket_width_usd = 300, std::uint32_t n_buckets = 7);

  void add(const RatesRecord& record);
  void merge(const BucketAccumulator& other);
  BucketResult result() const;

  /// Index of the half-open bucket holding `rate`, or n_buckets for overflow.
  std::uint32_t bucket_of(Rate rate) const;

 private:
  std::int64_t width_;
  std::uint32_t n_;
  std::vector<BucketRow> rows_;  // n_ + 1, the last one is overflow
};

BucketResult avg_output_by_rate_bucket(std::span<const RatesRecord> records,
                                       std::int64_t bucket_width_usd = 300,
                                       std::uint32_t n_buckets = 7);

// Whale transactions -------------------------------------------------------------

/// fee/1e8 x rate in units of 1e-8 USD, rounded half up.
std::int64_t fee_usd_units(std::int64_t fee_satoshi, Rate rate);

struct WhaleStats {
  long double mean = 0;
  long double sigma = 0;  // population
  long double threshold = 0;
  std::vector<std::size_t> whales;  // indices with value > threshold
};

/// Mean, population sigma and mean + 2 sigma over arbitrary values. The result
/// does not depend on the order of `values`. Throws EmptyInput.
WhaleStats whale_stats(std::span<const long double> values);

struct Whale {
  FeesRecord record;
  std::int64_t fee_usd = 0;  // 1e-8 USD
};

struct WhaleResult {
  std::uint64_t n = 0;
  long double mean_usd = 0;
  long double sigma_usd = 0;
  long double threshold_usd = 0;
  std::vector<Whale> whales;  // descending by fee_usd, ties by txHash
};

/// Records whose txHash is in `exclude` are left out entirely. Throws EmptyInput.
WhaleResult whale_transactions(std::span<const FeesRecord> records,
                               const std::unordered_set<std::string>* exclude = nullptr);

/// Coinbase rows of a fees view in file order: the first row of each block.
std::unordered_set<std::string> coinbase_txids(std::span<const FeesRecord> records);

// Daily transactions to tagged addresses ----------------------------------------------

struct DailyCount {
  Date date;
  std::uint64_t count = 0;
  friend bool operator==(const DailyCount&, const DailyCount&) = default;
};

class TagDailyAccumulator {
 public:
  explicit TagDailyAccumulator(std::string prefix) : prefix_(std::move(prefix)) {}

  void add(const TagsRecord& record);
  void merge(const TagDailyAccumulator& other);
  std::vector<DailyCount> result() const;

 private:
  std::string prefix_;
  std::map<Date, std::unordered_set<std::string>> txs_;
};

std::vector<DailyCount> daily_tx_to_tag_prefix(std::span<const TagsRecord> records,
                                               std::string_view prefix);

// Rendering ------------------------------------------------------------------------

enum class OutputFormat { Csv, Jsonl };

OutputFormat parse_output_format(std::string_view name);

/// Tabular result: numeric cells are emitted bare in JSONL, strings quoted.
struct ResultTable {
  struct Cell {
    std::string text;
    bool numeric = false;
  };
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::string render(OutputFormat format) const;
};

ResultTable to_table(std::span<const AvgIoRow> rows);
ResultTable to_table(std::span<const ProtocolCount> rows);
ResultTable to_table(const BucketResult& result);
ResultTable to_table(const WhaleResult& result);
ResultTable to_table(std::span<const DailyCount> rows);

/// Fixed-point rendering of a USD amount.
std::string render_usd(long double value, int decimals = 2);

}  // namespace chainview
