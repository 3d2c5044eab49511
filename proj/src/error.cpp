#include "chainview/error.hpp"

namespace chainview {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::Truncated: return "Truncated";
    case Errc::NonCanonical: return "NonCanonical";
    case Errc::OversizedScript: return "OversizedScript";
    case Errc::MalformedSegwit: return "MalformedSegwit";
    case Errc::ZeroInputs: return "ZeroInputs";
    case Errc::ZeroOutputs: return "ZeroOutputs";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::BadMagic: return "BadMagic";
    case Errc::Io: return "IO";
    case Errc::BadHex: return "BadHex";
    case Errc::GenesisNotFound: return "GenesisNotFound";
    case Errc::UnknownBlock: return "UnknownBlock";
    case Errc::Unreachable: return "Unreachable";
    case Errc::AuthFailed: return "AuthFailed";
    case Errc::RpcError: return "RpcError";
    case Errc::ParseError: return "ParseError";
    case Errc::RangeError: return "RangeError";
    case Errc::MissingPrevout: return "MissingPrevout";
    case Errc::NegativeFee: return "NegativeFee";
    case Errc::Precondition: return "Precondition";
    case Errc::DateNotCovered: return "DateNotCovered";
    case Errc::FetchFailed: return "FetchFailed";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::MalformedPush: return "MalformedPush";
    case Errc::UnsupportedSchema: return "UnsupportedSchema";
    case Errc::SinkState: return "SinkState";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::Clamped: return "Clamped";
    case Errc::VisitorFailed: return "VisitorFailed";
  }
  return "Unknown";
}

Error::Error(Errc code, std::string message, std::optional<std::uint64_t> position)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code),
      detail_(std::move(message)),
      position_(position) {}

}  // namespace chainview
