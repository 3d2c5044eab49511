#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chainview/core.hpp"
#include "chainview/enrichment.hpp"

namespace chainview {

// Deterministic synthetic chain generator. Its GroundTruth is the oracle for
// fees, UTXO state, record counts and analytics throughout the test suite.

struct TagSeed {
  std::string tag;
  bool p2sh = false;
};

struct GenSpec {
  std::uint64_t seed = 42;
  std::uint32_t n_blocks = 10;
  // Non-coinbase transactions per block, uniform over [min, max].
  std::uint32_t min_txs_per_block = 0;
  std::uint32_t max_txs_per_block = 10;
  // Fee per non-coinbase transaction in satoshi, uniform over [min, max].
  std::int64_t min_fee = 1'000;
  std::int64_t max_fee = 50'000;
  std::uint32_t max_inputs = 3;
  std::uint32_t max_outputs = 3;
  double opreturn_rate = 0.05;
  double tagged_payment_rate = 0.05;
  double intra_block_spend_rate = 0.1;
  double segwit_rate = 0.1;
  std::optional<std::uint32_t> fork_at;
  std::uint32_t start_time = 1'483'228'800;  // 2017-01-01T00:00:00Z
  std::uint32_t time_step = 600;
  // Zero bytes written after every record in the block file.
  std::uint32_t record_padding = 0;
  Network network = Network::Regtest;
  // Protocol identifiers planted at the head of OP_RETURN metadata.
  std::vector<std::string> opreturn_prefixes = {"omni", "CC", "id", "DOCPROOF", "EW "};
  std::vector<TagSeed> tags = {{"SatoshiDICE 48%", false},
                               {"SatoshiDICE 95%", true},
                               {"Linux Mint Donations", false},
                               {"WikiLeaks", true}};
};

struct TxTruth {
  Hash256 txid;
  std::uint64_t height = 0;
  bool coinbase = false;
  Amount input_sum;
  Amount output_sum;
  Amount fee;
  std::uint32_t n_inputs = 0;
  std::uint32_t n_outputs = 0;
};

struct BlockTruth {
  std::uint64_t height = 0;
  Hash256 hash;
  Date date;
  Amount subsidy;
  Amount fees;
  std::uint32_t n_txs = 0;
  // Unspent outputs (OP_RETURN included) after this block is applied.
  std::uint64_t live_utxos = 0;
};

struct PlantedOpReturn {
  Hash256 txid;
  std::uint32_t vout = 0;
  std::uint64_t height = 0;
  Bytes metadata;
  std::string prefix;
};

struct PlantedTag {
  Hash256 txid;
  std::uint32_t vout = 0;
  std::uint64_t height = 0;
  Amount value;
  std::string address;
  std::string tag;
};

struct DateTruth {
  Date date;
  std::uint64_t txs = 0;
  std::uint64_t inputs = 0;
  std::uint64_t outputs = 0;
  Amount fees;
};

struct GroundTruth {
  std::string prng = "mt19937_64";
  std::uint64_t seed = 0;
  Network network = Network::Regtest;
  std::vector<BlockTruth> blocks;
  std::vector<TxTruth> txs;
  std::vector<PlantedOpReturn> opreturns;
  std::vector<PlantedTag> tagged_outputs;
  std::vector<std::pair<std::string, std::string>> tag_addresses;  // address, tag
  std::vector<DateTruth> dates;
  std::vector<Hash256> orphans;
  std::uint64_t intra_block_spends = 0;
  std::uint64_t segwit_txs = 0;
};

struct GeneratedChain {
  // Main-chain block payloads in height order.
  std::vector<Bytes> blocks;
  // Stale side-branch payloads (fork mode).
  std::vector<Bytes> orphan_blocks;
  // blk-style file image: main blocks in order with any side block right
  // after its sibling.
  Bytes block_file;
  GroundTruth truth;
};

/// Throws InvalidSpec.
GeneratedChain generate(const GenSpec& spec);

std::string truth_to_json(const GroundTruth& truth);
/// Tag file ("address<TAB>tag") for the generator's tagged addresses.
std::string tags_file_contents(const GroundTruth& truth);
/// Deterministic BTC/USD rate per chain date, spread over [0, 2100).
RateTable synthetic_rates(const GroundTruth& truth);

}  // namespace chainview
