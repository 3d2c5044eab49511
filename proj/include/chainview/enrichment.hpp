#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chainview/core.hpp"
#include "chainview/error.hpp"

namespace chainview {

// Exchange rates --------------------------------------------------------------

/// USD per BTC as a fixed-point decimal with 8 fractional digits.
class Rate {
 public:
  static constexpr std::int64_t kScale = 100'000'000;

  constexpr Rate() = default;
  static constexpr Rate from_units(std::int64_t units) {
    Rate r;
    r.units_ = units;
    return r;
  }
  /// Rounds to the nearest 1e-8.
  static Rate from_double(double usd);
  /// Exact decimal parse ("997.75", "1e3" is rejected).
  static Rate parse(std::string_view text);

  std::int64_t units() const { return units_; }
  double to_double() const { return static_cast<double>(units_) / kScale; }
  /// Shortest exact decimal rendering with at least one fractional digit.
  std::string to_string() const;

  friend constexpr auto operator<=>(Rate, Rate) = default;

 private:
  std::int64_t units_ = 0;
};

/// Date-indexed BTC/USD rates. File-backed tables are read fully on load;
/// HTTP-backed tables fetch a date on first use and append it to a CSV cache.
class RateTable {
 public:
  RateTable() = default;
  RateTable(const RateTable&) = delete;
  RateTable& operator=(const RateTable&) = delete;
  RateTable(RateTable&&) noexcept;
  RateTable& operator=(RateTable&&) noexcept;

  /// CSV "date,rate" with optional header row.
  static RateTable from_csv(const std::filesystem::path& path);
  /// Coindesk-shaped endpoint: GET <base>?start=D&end=D -> {"bpi":{"D":rate}}.
  /// An existing cache file is loaded first; new fetches are appended to it.
  static RateTable from_http(std::string base_url, std::filesystem::path cache_path);

  void set(Date date, Rate rate);
  /// Throws DateNotCovered, or FetchFailed for HTTP tables.
  Rate get(Date date) const;
  bool covers(Date date) const;
  std::size_t size() const;
  std::map<Date, Rate> entries() const;

  void save_csv(const std::filesystem::path& path) const;

 private:
  Rate fetch(Date date) const;

  mutable std::map<Date, Rate> rates_;
  std::string base_url_;
  std::filesystem::path cache_path_;
  mutable std::unique_ptr<std::mutex> fetch_mutex_ = std::make_unique<std::mutex>();
};

// Address tags ----------------------------------------------------------------

class TagMap {
 public:
  void insert(std::string address, std::string tag);
  const std::string* find(std::string_view address) const;
  std::size_t size() const { return tags_.size(); }
  bool empty() const { return tags_.empty(); }
  const std::unordered_map<std::string, std::string>& entries() const { return tags_; }

 private:
  std::unordered_map<std::string, std::string> tags_;
};

/// "address<TAB>tag" per line; duplicates keep the first and warn.
TagMap load_tags(const std::filesystem::path& path, Warnings* warnings = nullptr);

// OP_RETURN -------------------------------------------------------------------

inline constexpr std::uint8_t kOpReturn = 0x6A;

bool is_op_return(const Script& script);
/// Concatenated push payloads following OP_RETURN. Stops at the first
/// non-push opcode. Throws MalformedPush when a push overruns the script.
Bytes extract_metadata(const Script& script);

struct ProtocolRule {
  Bytes prefix;
  std::string name;
};

class ProtocolTable {
 public:
  ProtocolTable() = default;
  explicit ProtocolTable(std::vector<ProtocolRule> rules) : rules_(std::move(rules)) {}

  /// Built-in identifiers for the commonly seen OP_RETURN protocols.
  static ProtocolTable defaults();
  /// CSV "hex_prefix,name" in priority order; '#' lines and a header are skipped.
  static ProtocolTable load(const std::filesystem::path& path);

  /// First rule whose prefix matches wins; "unknown" otherwise.
  std::string classify(ByteView metadata) const;
  const std::vector<ProtocolRule>& rules() const { return rules_; }

 private:
  std::vector<ProtocolRule> rules_;
};

inline std::string classify_protocol(const ProtocolTable& table, ByteView metadata) {
  return table.classify(metadata);
}

// Addresses -------------------------------------------------------------------

std::string base58_encode(ByteView data);
std::optional<Bytes> base58_decode(std::string_view text);
std::string base58check_encode(std::uint8_t version, ByteView payload);
/// Returns (version, payload) when the checksum verifies.
std::optional<std::pair<std::uint8_t, Bytes>> base58check_decode(std::string_view text);

std::uint8_t p2pkh_version(Network net);
std::uint8_t p2sh_version(Network net);

/// Address that can redeem a P2PKH, P2SH or P2PK output; nullopt otherwise.
std::optional<std::string> address_of(const Script& script_pubkey, Network net);

// Script builders shared by the generator and tests.
Script make_p2pkh(ByteView hash160);
Script make_p2sh(ByteView hash160);
Script make_p2pk(ByteView pubkey);
Script make_op_return(ByteView metadata);

}  // namespace chainview
