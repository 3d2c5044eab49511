#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainview/error.hpp"
#include "chainview/hash.hpp"

namespace chainview {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(ByteView bytes);
/// Throws Error(BadHex) on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// 32-byte hash stored in internal (wire) order. Rendering is byte-reversed.
class Hash256 {
 public:
  static constexpr std::size_t kSize = 32;

  constexpr Hash256() = default;
  explicit Hash256(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  /// Parses display-order hex (64 chars).
  static Hash256 from_display_hex(std::string_view hex);
  static Hash256 from_internal(ByteView bytes);

  std::string to_display_hex() const;
  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  bool is_null() const;

  friend auto operator<=>(const Hash256&, const Hash256&) = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

Hash256 double_sha256(ByteView data);

/// Satoshi count. 1 BTC = 10^8 satoshi.
struct Amount {
  std::int64_t satoshi = 0;

  constexpr Amount() = default;
  constexpr explicit Amount(std::int64_t sat) : satoshi(sat) {}

  constexpr Amount& operator+=(Amount o) {
    satoshi += o.satoshi;
    return *this;
  }
  constexpr Amount& operator-=(Amount o) {
    satoshi -= o.satoshi;
    return *this;
  }
  friend constexpr Amount operator+(Amount a, Amount b) { return Amount{a.satoshi + b.satoshi}; }
  friend constexpr Amount operator-(Amount a, Amount b) { return Amount{a.satoshi - b.satoshi}; }
  friend constexpr auto operator<=>(Amount, Amount) = default;
};

inline constexpr std::int64_t kCoin = 100'000'000;

struct OutPoint {
  static constexpr std::uint32_t kNullIndex = 0xFFFFFFFF;

  Hash256 txid;
  std::uint32_t vout = 0;

  static OutPoint coinbase_sentinel() { return OutPoint{Hash256{}, kNullIndex}; }
  bool is_coinbase_sentinel() const { return vout == kNullIndex && txid.is_null(); }

  friend auto operator<=>(const OutPoint&, const OutPoint&) = default;
};

struct OutPointHasher {
  std::size_t operator()(const OutPoint& p) const noexcept;
};

struct Script {
  Bytes bytes;

  std::string to_hex() const { return chainview::to_hex(bytes); }
  std::size_t size() const { return bytes.size(); }
  bool empty() const { return bytes.empty(); }

  friend bool operator==(const Script&, const Script&) = default;
};

struct TxInput {
  OutPoint prevout;
  Script script_sig;
  std::uint32_t sequence = 0xFFFFFFFF;
  std::vector<Bytes> witness;

  friend bool operator==(const TxInput&, const TxInput&) = default;
};

struct TxOutput {
  Amount value;
  Script script_pubkey;

  friend bool operator==(const TxOutput&, const TxOutput&) = default;
};

struct Transaction {
  std::int32_t version = 1;
  std::vector<TxInput> inputs;
  std::vector<TxOutput> outputs;
  std::uint32_t locktime = 0;

  // Derived on seal()/parse: witness-stripped id and full serialized size.
  Hash256 txid;
  std::size_t size_bytes = 0;

  bool has_witness() const;
  bool is_coinbase() const {
    return inputs.size() == 1 && inputs.front().prevout.is_coinbase_sentinel();
  }

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct BlockHeader {
  static constexpr std::size_t kSize = 80;

  std::int32_t version = 1;
  Hash256 prev_hash;
  Hash256 merkle_root;
  std::uint32_t time = 0;
  std::uint32_t bits = 0;
  std::uint32_t nonce = 0;

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

struct Block {
  BlockHeader header;
  std::vector<Transaction> txs;
  Hash256 hash;
  std::optional<std::uint64_t> height;

  friend bool operator==(const Block&, const Block&) = default;
};

// Serialization ---------------------------------------------------------------

void write_varint(Bytes& out, std::uint64_t value);
void write_header(Bytes& out, const BlockHeader& header);
void write_transaction(Bytes& out, const Transaction& tx, bool with_witness = true);
void write_block(Bytes& out, const Block& block);

Bytes serialize(const BlockHeader& header);
Bytes serialize(const Transaction& tx, bool with_witness = true);
Bytes serialize(const Block& block);

Hash256 block_hash(const BlockHeader& header);
/// Witness-stripped double-SHA256; witness data never affects the id.
Hash256 tx_id(const Transaction& tx);
/// Recomputes the derived txid/size fields.
void seal(Transaction& tx);
/// Seals every transaction and recomputes the block hash.
void seal(Block& block);

Hash256 merkle_root(std::span<const Transaction> txs);

// Calendar ------------------------------------------------------------------

/// UTC calendar day, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Strict "YYYY-MM-DD"; throws Error(ParseError).
  static Date parse(std::string_view text);

  std::int32_t days_since_epoch() const { return days_; }
  std::string to_string() const;

  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  std::int32_t days_ = 0;
};

Date date_of(std::uint32_t unix_seconds);

// Networks ------------------------------------------------------------------

enum class Network { Mainnet, Testnet, Regtest };

std::array<std::uint8_t, 4> network_magic(Network net);
Network parse_network(std::string_view name);
std::string_view network_name(Network net);

}  // namespace chainview

template <>
struct std::hash<chainview::Hash256> {
  std::size_t operator()(const chainview::Hash256& h) const noexcept;
};
