#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chainview {

enum class Errc {
  Truncated,
  NonCanonical,
  OversizedScript,
  MalformedSegwit,
  ZeroInputs,
  ZeroOutputs,
  TrailingBytes,
  BadMagic,
  Io,
  BadHex,
  GenesisNotFound,
  UnknownBlock,
  Unreachable,
  AuthFailed,
  RpcError,
  ParseError,
  RangeError,
  MissingPrevout,
  NegativeFee,
  Precondition,
  DateNotCovered,
  FetchFailed,
  MalformedLine,
  MalformedPush,
  UnsupportedSchema,
  SinkState,
  EmptyInput,
  InvalidSpec,
  DuplicateKey,
  Clamped,
  VisitorFailed,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the library carries a machine-readable code and,
// where meaningful, a byte offset or block height.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::optional<std::uint64_t> position = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::uint64_t> position() const noexcept { return position_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
  std::optional<std::uint64_t> position_;
};

// Non-fatal findings (non-canonical varints, clamped ranges, duplicate tags...).
struct Warning {
  Errc code;
  std::string message;
  std::optional<std::uint64_t> position;
};

using Warnings = std::vector<Warning>;

}  // namespace chainview
