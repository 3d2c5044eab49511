#include "chainview/parser.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

namespace chainview {

namespace {

// Smallest possible encodings, used to bound declared counts before allocating.
constexpr std::size_t kMinInputSize = 32 + 4 + 1 + 4;
constexpr std::size_t kMinOutputSize = 8 + 1;
constexpr std::size_t kMinTxSize = 4 + 1 + kMinInputSize + 1 + kMinOutputSize + 4;

std::size_t checked_count(ByteCursor& cursor, std::size_t min_item_size, const char* what) {
  const std::uint64_t n = read_varint(cursor);
  if (n > cursor.remaining() / min_item_size) {
    throw Error(Errc::Truncated,
                std::string("declared ") + what + " count " + std::to_string(n) +
                    " exceeds remaining bytes",
                cursor.position());
  }
  return static_cast<std::size_t>(n);
}

Bytes read_var_bytes(ByteCursor& cursor, const char* what) {
  const std::uint64_t n = read_varint(cursor);
  if (n > cursor.remaining()) {
    throw Error(Errc::Truncated,
                std::string("declared ") + what + " length " + std::to_string(n) +
                    " exceeds remaining bytes",
                cursor.position());
  }
  const ByteView v = cursor.read_bytes(static_cast<std::size_t>(n));
  return Bytes(v.begin(), v.end());
}

Script read_script(ByteCursor& cursor, const char* what) {
  Script s{read_var_bytes(cursor, what)};
  if (s.size() > kMaxScriptSize) {
    cursor.warn(Errc::OversizedScript,
                std::string(what) + " of " + std::to_string(s.size()) + " bytes");
  }
  return s;
}

Hash256 read_hash(ByteCursor& cursor) { return Hash256::from_internal(cursor.read_bytes(32)); }

}  // namespace

void ByteCursor::require(std::size_t n) const {
  if (n > remaining()) {
    throw Error(Errc::Truncated,
                "need " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                    " remain",
                position());
  }
}

std::uint8_t ByteCursor::read_u8() {
  require(1);
  return buffer_[offset_++];
}

std::uint8_t ByteCursor::peek_u8() const {
  require(1);
  return buffer_[offset_];
}

std::uint16_t ByteCursor::read_u16() {
  require(2);
  const std::uint16_t v =
      static_cast<std::uint16_t>(buffer_[offset_] | (buffer_[offset_ + 1] << 8));
  offset_ += 2;
  return v;
}

std::uint32_t ByteCursor::read_u32() {
  require(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buffer_[offset_ + i];
  offset_ += 4;
  return v;
}

std::uint64_t ByteCursor::read_u64() {
  require(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buffer_[offset_ + i];
  offset_ += 8;
  return v;
}

ByteView ByteCursor::read_bytes(std::size_t n) {
  require(n);
  const ByteView v = buffer_.subspan(offset_, n);
  offset_ += n;
  return v;
}

std::uint64_t read_varint(ByteCursor& cursor) {
  const std::uint8_t tag = cursor.read_u8();
  std::uint64_t value = 0;
  std::uint64_t min_for_width = 0;
  switch (tag) {
    case 0xFD:
      value = cursor.read_u16();
      min_for_width = 0xFD;
      break;
    case 0xFE:
      value = cursor.read_u32();
      min_for_width = 0x10000;
      break;
    case 0xFF:
      value = cursor.read_u64();
      min_for_width = 0x100000000ULL;
      break;
    default:
      return tag;
  }
  if (value < min_for_width) {
    cursor.warn(Errc::NonCanonical,
                "varint " + std::to_string(value) + " encoded with prefix " +
                    std::to_string(tag));
  }
  return value;
}

BlockHeader parse_header(ByteCursor& cursor) {
  if (cursor.remaining() < BlockHeader::kSize) {
    throw Error(Errc::Truncated, "block header needs 80 bytes", cursor.position());
  }
  BlockHeader h;
  h.version = static_cast<std::int32_t>(cursor.read_u32());
  h.prev_hash = read_hash(cursor);
  h.merkle_root = read_hash(cursor);
  h.time = cursor.read_u32();
  h.bits = cursor.read_u32();
  h.nonce = cursor.read_u32();
  return h;
}

Transaction parse_transaction(ByteCursor& cursor) {
  const std::size_t start = cursor.offset();
  const std::uint64_t start_pos = cursor.position();
  Transaction tx;
  tx.version = static_cast<std::int32_t>(cursor.read_u32());

  bool segwit = false;
  if (cursor.peek_u8() == 0x00) {
    cursor.read_u8();
    const std::uint8_t flag = cursor.read_u8();
    if (flag != 0x01) {
      throw Error(Errc::MalformedSegwit,
                  "segwit marker followed by flag " + std::to_string(flag), cursor.position());
    }
    segwit = true;
  }

  const std::size_t n_in = checked_count(cursor, kMinInputSize, "input");
  if (n_in == 0) throw Error(Errc::ZeroInputs, "transaction has no inputs", start_pos);
  tx.inputs.reserve(n_in);
  for (std::size_t i = 0; i < n_in; ++i) {
    TxInput in;
    in.prevout.txid = read_hash(cursor);
    in.prevout.vout = cursor.read_u32();
    in.script_sig = read_script(cursor, "scriptSig");
    in.sequence = cursor.read_u32();
    tx.inputs.push_back(std::move(in));
  }

  const std::size_t n_out = checked_count(cursor, kMinOutputSize, "output");
  if (n_out == 0) throw Error(Errc::ZeroOutputs, "transaction has no outputs", start_pos);
  tx.outputs.reserve(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    TxOutput o;
    const std::uint64_t pos = cursor.position();
    o.value = Amount{static_cast<std::int64_t>(cursor.read_u64())};
    if (o.value.satoshi < 0) throw Error(Errc::ParseError, "negative output value", pos);
    o.script_pubkey = read_script(cursor, "scriptPubKey");
    tx.outputs.push_back(std::move(o));
  }

  if (segwit) {
    for (auto& in : tx.inputs) {
      const std::size_t n_items = checked_count(cursor, 1, "witness item");
      in.witness.reserve(n_items);
      for (std::size_t k = 0; k < n_items; ++k) in.witness.push_back(read_var_bytes(cursor, "witness"));
    }
    if (!tx.has_witness()) {
      throw Error(Errc::MalformedSegwit, "segwit serialization with empty witnesses", start_pos);
    }
  }
  tx.locktime = cursor.read_u32();

  tx.size_bytes = cursor.offset() - start;
  // Legacy layout: the consumed bytes are already the stripped serialization.
  tx.txid = segwit ? tx_id(tx) : double_sha256(cursor.consumed_since(start));
  return tx;
}

Block parse_block(ByteView bytes, Warnings* warnings) {
  ByteCursor cursor(bytes);
  Block block;
  block.header = parse_header(cursor);
  block.hash = double_sha256(bytes.first(BlockHeader::kSize));
  const std::size_t n_tx = checked_count(cursor, kMinTxSize, "transaction");
  block.txs.reserve(n_tx);
  for (std::size_t i = 0; i < n_tx; ++i) {
    block.txs.push_back(parse_transaction(cursor));
  }
  if (!cursor.at_end()) {
    throw Error(Errc::TrailingBytes,
                std::to_string(cursor.remaining()) + " bytes after last transaction",
                cursor.position());
  }
  if (warnings) {
    auto w = cursor.take_warnings();
    warnings->insert(warnings->end(), std::make_move_iterator(w.begin()),
                     std::make_move_iterator(w.end()));
  }
  return block;
}

// Block files ---------------------------------------------------------------

BlockFileReader::BlockFileReader(const std::filesystem::path& path,
                                 std::array<std::uint8_t, 4> magic)
    : path_(path), in_(path, std::ios::binary), magic_(magic) {
  if (!in_) throw Error(Errc::Io, "cannot open " + path.string());
  std::error_code ec;
  file_size_ = std::filesystem::file_size(path, ec);
  if (ec) throw Error(Errc::Io, "cannot stat " + path.string() + ": " + ec.message());
}

std::optional<BlockFileRecord> BlockFileReader::next_record() {
  // Skip zero padding between records.
  while (offset_ < file_size_) {
    const int c = in_.peek();
    if (c == std::char_traits<char>::eof()) break;
    if (c != 0) break;
    in_.get();
    ++offset_;
  }
  if (offset_ >= file_size_) return std::nullopt;

  std::array<std::uint8_t, 8> head;
  if (file_size_ - offset_ < head.size()) {
    throw Error(Errc::Truncated, "record header cut short in " + path_.string(), offset_);
  }
  in_.read(reinterpret_cast<char*>(head.data()), head.size());
  if (!in_) throw Error(Errc::Io, "read failed in " + path_.string(), offset_);
  if (!std::equal(magic_.begin(), magic_.end(), head.begin())) {
    throw Error(Errc::BadMagic, "unexpected magic " + to_hex(ByteView(head.data(), 4)) +
                                    " in " + path_.string(),
                offset_);
  }
  const std::uint32_t length = static_cast<std::uint32_t>(head[4]) |
                               (static_cast<std::uint32_t>(head[5]) << 8) |
                               (static_cast<std::uint32_t>(head[6]) << 16) |
                               (static_cast<std::uint32_t>(head[7]) << 24);
  offset_ += head.size();
  if (length > file_size_ - offset_) {
    throw Error(Errc::Truncated,
                "record length " + std::to_string(length) + " past end of " + path_.string(),
                offset_);
  }
  BlockFileRecord rec;
  rec.payload_offset = offset_;
  rec.payload.resize(length);
  in_.read(reinterpret_cast<char*>(rec.payload.data()), length);
  if (!in_) throw Error(Errc::Io, "read failed in " + path_.string(), offset_);
  offset_ += length;
  return rec;
}

std::optional<Block> BlockFileReader::next_block(Warnings* warnings) {
  auto rec = next_record();
  if (!rec) return std::nullopt;
  return parse_block(rec->payload, warnings);
}

Bytes read_block_payload(const std::filesystem::path& path, std::uint64_t payload_offset) {
  std::ifstream in(path, std::ios::binary);
  if (!in || payload_offset < 4) throw Error(Errc::Io, "cannot open " + path.string());
  in.seekg(static_cast<std::streamoff>(payload_offset - 4));
  std::array<std::uint8_t, 4> len_bytes;
  in.read(reinterpret_cast<char*>(len_bytes.data()), 4);
  if (!in) throw Error(Errc::Io, "cannot read record length", payload_offset);
  const std::uint32_t length = static_cast<std::uint32_t>(len_bytes[0]) |
                               (static_cast<std::uint32_t>(len_bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(len_bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(len_bytes[3]) << 24);
  Bytes payload(length);
  in.read(reinterpret_cast<char*>(payload.data()), length);
  if (!in) throw Error(Errc::Truncated, "record payload cut short", payload_offset);
  return payload;
}

void append_block_record(Bytes& out, std::array<std::uint8_t, 4> magic, ByteView payload) {
  out.insert(out.end(), magic.begin(), magic.end());
  const auto n = static_cast<std::uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), payload.begin(), payload.end());
}

}  // namespace chainview
