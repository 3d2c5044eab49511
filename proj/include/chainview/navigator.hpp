#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "chainview/core.hpp"
#include "chainview/error.hpp"
#include "chainview/sources.hpp"

namespace chainview {

/// Outpoint -> value for every unspent output seen so far in a forward scan.
/// Spent entries are removed.
class UtxoMap {
 public:
  struct Stats {
    std::uint64_t inserts = 0;
    std::uint64_t removals = 0;
    std::uint64_t peak_size = 0;
  };

  void insert(const OutPoint& outpoint, Amount value);
  std::optional<Amount> find(const OutPoint& outpoint) const;
  /// Removes and returns the entry.
  std::optional<Amount> take(const OutPoint& outpoint);

  std::size_t size() const { return entries_.size(); }
  const Stats& stats() const { return stats_; }

 private:
  std::unordered_map<OutPoint, Amount, OutPointHasher> entries_;
  Stats stats_;
};

struct TxValuation {
  Hash256 txid;
  Amount input_sum;
  Amount output_sum;
  Amount fee;
  bool is_coinbase = false;
  // Inputs worth less than outputs; invalid on a real chain, kept and flagged.
  bool negative_fee = false;

  friend bool operator==(const TxValuation&, const TxValuation&) = default;
};

inline constexpr std::uint64_t kHalvingInterval = 210'000;
inline constexpr Amount kInitialSubsidy{50 * kCoin};

/// 50 BTC shifted right once per 210,000 blocks.
Amount block_subsidy(std::uint64_t height);

Amount output_sum(const Transaction& tx);
/// Throws MissingPrevout for any non-coinbase input absent from the map.
Amount input_sum(const Transaction& tx, const UtxoMap& utxo);

/// Applies one block to the map and values each transaction, in block order.
/// The coinbase is valued last (subsidy + collected fees) but reported first.
std::vector<TxValuation> valuate_block(const Block& block, std::uint64_t height, UtxoMap& utxo,
                                       Warnings* warnings = nullptr);

struct ScanReport {
  std::uint64_t blocks = 0;
  std::uint64_t txs = 0;
  std::uint64_t utxo_peak = 0;
  std::uint64_t utxo_size = 0;
  UtxoMap::Stats utxo_stats;
  Warnings warnings;
};

using ScanVisitor =
    std::function<void(std::uint64_t height, const Block& block, std::span<const TxValuation>)>;

/// Forward scan that resolves input values. Must start at height 0.
ScanReport deep_scan(ChainSource& source, std::optional<std::uint64_t> start,
                     std::optional<std::uint64_t> end, const ScanVisitor& visitor);

/// {"blocks":..,"txs":..,"utxo_peak":..,"warnings":..}
std::string scan_report_json(const ScanReport& report);

}  // namespace chainview
