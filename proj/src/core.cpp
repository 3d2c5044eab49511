#include "chainview/core.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>

#include "chainview/error.hpp"

namespace chainview {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <typename T>
void write_le(Bytes& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

void write_bytes(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

void write_var_bytes(Bytes& out, ByteView data) {
  write_varint(out, data.size());
  write_bytes(out, data);
}

}  // namespace

std::string to_hex(ByteView bytes) {
  std::string s;
  s.resize(bytes.size() * 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    s[2 * i] = kHexDigits[bytes[i] >> 4];
    s[2 * i + 1] = kHexDigits[bytes[i] & 0x0F];
  }
  return s;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::BadHex, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::BadHex, "invalid hex character", 2 * i);
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

Hash256 Hash256::from_display_hex(std::string_view hex) {
  if (hex.size() != 2 * kSize) throw Error(Errc::BadHex, "hash must be 64 hex characters");
  Bytes raw = from_hex(hex);
  std::reverse(raw.begin(), raw.end());
  return from_internal(raw);
}

Hash256 Hash256::from_internal(ByteView bytes) {
  if (bytes.size() != kSize) throw Error(Errc::BadHex, "hash must be 32 bytes");
  std::array<std::uint8_t, kSize> a;
  std::copy(bytes.begin(), bytes.end(), a.begin());
  return Hash256(a);
}

std::string Hash256::to_display_hex() const {
  std::array<std::uint8_t, kSize> rev;
  std::reverse_copy(bytes_.begin(), bytes_.end(), rev.begin());
  return to_hex(rev);
}

bool Hash256::is_null() const {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

Hash256 double_sha256(ByteView data) { return Hash256(sha256d(data)); }

std::size_t OutPointHasher::operator()(const OutPoint& p) const noexcept {
  return std::hash<Hash256>{}(p.txid) ^ (std::size_t{p.vout} * 0x9E3779B97F4A7C15ULL);
}

bool Transaction::has_witness() const {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const TxInput& in) { return !in.witness.empty(); });
}

void write_varint(Bytes& out, std::uint64_t value) {
  if (value < 0xFD) {
    out.push_back(static_cast<std::uint8_t>(value));
  } else if (value <= 0xFFFF) {
    out.push_back(0xFD);
    write_le(out, static_cast<std::uint16_t>(value));
  } else if (value <= 0xFFFFFFFF) {
    out.push_back(0xFE);
    write_le(out, static_cast<std::uint32_t>(value));
  } else {
    out.push_back(0xFF);
    write_le(out, value);
  }
}

void write_header(Bytes& out, const BlockHeader& h) {
  write_le(out, h.version);
  write_bytes(out, h.prev_hash.bytes());
  write_bytes(out, h.merkle_root.bytes());
  write_le(out, h.time);
  write_le(out, h.bits);
  write_le(out, h.nonce);
}

void write_transaction(Bytes& out, const Transaction& tx, bool with_witness) {
  const bool segwit = with_witness && tx.has_witness();
  write_le(out, tx.version);
  if (segwit) {
    out.push_back(0x00);
    out.push_back(0x01);
  }
  write_varint(out, tx.inputs.size());
  for (const auto& in : tx.inputs) {
    write_bytes(out, in.prevout.txid.bytes());
    write_le(out, in.prevout.vout);
    write_var_bytes(out, in.script_sig.bytes);
    write_le(out, in.sequence);
  }
  write_varint(out, tx.outputs.size());
  for (const auto& o : tx.outputs) {
    write_le(out, o.value.satoshi);
    write_var_bytes(out, o.script_pubkey.bytes);
  }
  if (segwit) {
    for (const auto& in : tx.inputs) {
      write_varint(out, in.witness.size());
      for (const auto& item : in.witness) write_var_bytes(out, item);
    }
  }
  write_le(out, tx.locktime);
}

void write_block(Bytes& out, const Block& block) {
  write_header(out, block.header);
  write_varint(out, block.txs.size());
  for (const auto& tx : block.txs) write_transaction(out, tx, true);
}

Bytes serialize(const BlockHeader& header) {
  Bytes out;
  out.reserve(BlockHeader::kSize);
  write_header(out, header);
  return out;
}

Bytes serialize(const Transaction& tx, bool with_witness) {
  Bytes out;
  write_transaction(out, tx, with_witness);
  return out;
}

Bytes serialize(const Block& block) {
  Bytes out;
  write_block(out, block);
  return out;
}

Hash256 block_hash(const BlockHeader& header) { return double_sha256(serialize(header)); }

Hash256 tx_id(const Transaction& tx) { return double_sha256(serialize(tx, false)); }

void seal(Transaction& tx) {
  tx.txid = tx_id(tx);
  tx.size_bytes = serialize(tx, true).size();
}

void seal(Block& block) {
  for (auto& tx : block.txs) seal(tx);
  block.hash = block_hash(block.header);
}

Hash256 merkle_root(std::span<const Transaction> txs) {
  if (txs.empty()) return Hash256{};
  std::vector<Hash256> level;
  level.reserve(txs.size());
  for (const auto& tx : txs) level.push_back(tx.txid);
  while (level.size() > 1) {
    if (level.size() % 2 != 0) level.push_back(level.back());
    std::vector<Hash256> next;
    next.reserve(level.size() / 2);
    std::array<std::uint8_t, 64> pair;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      std::copy(level[i].bytes().begin(), level[i].bytes().end(), pair.begin());
      std::copy(level[i + 1].bytes().begin(), level[i + 1].bytes().end(), pair.begin() + 32);
      next.push_back(double_sha256(pair));
    }
    level = std::move(next);
  }
  return level.front();
}

// Calendar ------------------------------------------------------------------

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok()) throw Error(Errc::ParseError, "invalid calendar date");
  return Date(static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

Date Date::parse(std::string_view text) {
  auto digits = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') {
        throw Error(Errc::ParseError, "malformed date '" + std::string(text) + "'");
      }
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(Errc::ParseError, "malformed date '" + std::string(text) + "'");
  }
  return from_ymd(digits(0, 4), static_cast<unsigned>(digits(5, 2)),
                  static_cast<unsigned>(digits(8, 2)));
}

std::string Date::to_string() const {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date date_of(std::uint32_t unix_seconds) {
  return Date(static_cast<std::int32_t>(unix_seconds / 86400));
}

// Networks ------------------------------------------------------------------

std::array<std::uint8_t, 4> network_magic(Network net) {
  switch (net) {
    case Network::Mainnet: return {0xF9, 0xBE, 0xB4, 0xD9};
    case Network::Testnet: return {0x0B, 0x11, 0x09, 0x07};
    case Network::Regtest: return {0xFA, 0xBF, 0xB5, 0xDA};
  }
  return {0xF9, 0xBE, 0xB4, 0xD9};
}

Network parse_network(std::string_view name) {
  if (name == "mainnet" || name == "main") return Network::Mainnet;
  if (name == "testnet" || name == "test") return Network::Testnet;
  if (name == "regtest") return Network::Regtest;
  throw Error(Errc::ParseError, "unknown network '" + std::string(name) + "'");
}

std::string_view network_name(Network net) {
  switch (net) {
    case Network::Mainnet: return "mainnet";
    case Network::Testnet: return "testnet";
    case Network::Regtest: return "regtest";
  }
  return "mainnet";
}

}  // namespace chainview

std::size_t std::hash<chainview::Hash256>::operator()(const chainview::Hash256& h) const noexcept {
  std::size_t v;
  std::memcpy(&v, h.bytes().data(), sizeof v);
  return v;
}
