#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>

#include "chainview/core.hpp"
#include "chainview/error.hpp"

namespace chainview {

// Scripts longer than this are accepted but flagged.
inline constexpr std::size_t kMaxScriptSize = 10'000;

/// Bounded reader over a byte buffer. Reads never pass the end; a short read
/// throws Error(Truncated) with the offset where it happened.
class ByteCursor {
 public:
  explicit ByteCursor(ByteView buffer, std::uint64_t base_offset = 0)
      : buffer_(buffer), base_(base_offset) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return buffer_.size() - offset_; }
  bool at_end() const { return offset_ == buffer_.size(); }

  std::uint8_t read_u8();
  std::uint16_t read_u16();
  std::uint32_t read_u32();
  std::uint64_t read_u64();
  ByteView read_bytes(std::size_t n);
  std::uint8_t peek_u8() const;
  /// Bytes consumed between `start` and the current offset.
  ByteView consumed_since(std::size_t start) const { return buffer_.subspan(start, offset_ - start); }

  /// Absolute position (base offset + cursor offset) for error reporting.
  std::uint64_t position() const { return base_ + offset_; }

  void warn(Errc code, std::string message) {
    warnings_.push_back(Warning{code, std::move(message), position()});
  }
  const Warnings& warnings() const { return warnings_; }
  Warnings take_warnings() { return std::exchange(warnings_, {}); }

 private:
  void require(std::size_t n) const;

  ByteView buffer_;
  std::size_t offset_ = 0;
  std::uint64_t base_ = 0;
  Warnings warnings_;
};

/// CompactSize. Non-canonical encodings are accepted with a warning.
std::uint64_t read_varint(ByteCursor& cursor);

BlockHeader parse_header(ByteCursor& cursor);
Transaction parse_transaction(ByteCursor& cursor);

/// Decodes a whole block; the buffer must be consumed exactly.
Block parse_block(ByteView bytes, Warnings* warnings = nullptr);

/// One [magic][len][payload] record located in a blk-style file.
struct BlockFileRecord {
  std::uint64_t payload_offset = 0;
  Bytes payload;
};

/// Sequential reader for blk-style files. Runs of zero bytes between records
/// are skipped; any other mismatch is Error(BadMagic) at the offending offset.
class BlockFileReader {
 public:
  BlockFileReader(const std::filesystem::path& path, std::array<std::uint8_t, 4> magic);

  std::optional<BlockFileRecord> next_record();
  std::optional<Block> next_block(Warnings* warnings = nullptr);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::array<std::uint8_t, 4> magic_;
  std::uint64_t offset_ = 0;
  std::uint64_t file_size_ = 0;
};

/// Reads the payload of one record given the payload offset and the magic.
Bytes read_block_payload(const std::filesystem::path& path, std::uint64_t payload_offset);

/// Appends one record to a blk-style byte stream.
void append_block_record(Bytes& out, std::array<std::uint8_t, 4> magic, ByteView payload);

}  // namespace chainview
