#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "chainview/core.hpp"
#include "chainview/error.hpp"
#include "chainview/parser.hpp"

namespace chainview {

/// Height-indexed access to a main chain.
class ChainSource {
 public:
  virtual ~ChainSource() = default;

  virtual std::uint64_t best_height() = 0;
  virtual Hash256 hash_at(std::uint64_t height) = 0;
  virtual Block block_by_hash(const Hash256& hash) = 0;
};

// Blocks held in memory, in height order (used for synthetic chains).
class MemorySource : public ChainSource {
 public:
  /// Each payload must decode; blocks must be prev-linked in order.
  explicit MemorySource(std::vector<Bytes> payloads);

  std::uint64_t best_height() override;
  Hash256 hash_at(std::uint64_t height) override;
  Block block_by_hash(const Hash256& hash) override;

 private:
  std::vector<Bytes> payloads_;
  std::vector<Hash256> hashes_;
  std::unordered_map<Hash256, std::size_t> by_hash_;
};

// Raw block files ---------------------------------------------------------------

struct BlockLocation {
  std::size_t file = 0;  // index into FileIndex::files
  std::uint64_t payload_offset = 0;
};

struct FileIndex {
  std::vector<std::filesystem::path> files;
  std::unordered_map<Hash256, BlockLocation> by_hash;
  std::vector<Hash256> main_chain;
  std::uint64_t orphans = 0;
  Warnings warnings;
};

/// Two-pass index: headers and prev-links first, then a walk forward from
/// genesis taking the child with the longest descendant chain (ties go to the
/// first-seen block). Paths are scanned in lexicographic order so the result
/// does not depend on argument order. When genesis is nullopt the first block
/// with an all-zero prev hash is used.
FileIndex build_file_index(std::vector<std::filesystem::path> paths,
                           std::optional<Hash256> genesis,
                           std::array<std::uint8_t, 4> magic);

/// All blk*.dat files (or *.dat / *.blk) in a directory.
std::vector<std::filesystem::path> list_block_files(const std::filesystem::path& dir);

class FileSource : public ChainSource {
 public:
  explicit FileSource(FileIndex index) : index_(std::move(index)) {}

  std::uint64_t best_height() override;
  Hash256 hash_at(std::uint64_t height) override;
  Block block_by_hash(const Hash256& hash) override;

  const FileIndex& index() const { return index_; }

 private:
  FileIndex index_;
};

// JSON-RPC ------------------------------------------------------------------------

struct RpcCredentials {
  std::string user;
  std::string password;
};

/// Bitcoin Core style JSON-RPC 1.0 over HTTP with Basic auth.
class RpcSource : public ChainSource {
 public:
  RpcSource(std::string url, RpcCredentials credentials);
  ~RpcSource() override;

  std::uint64_t best_height() override;
  Hash256 hash_at(std::uint64_t height) override;
  Block block_by_hash(const Hash256& hash) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<ChainSource> rpc_source(std::string url, RpcCredentials credentials);

// Iteration -------------------------------------------------------------------------

struct HeightBlock {
  std::uint64_t height = 0;
  Block block;
};

/// Ascending scan over [start, end]: hash by height, block by hash, next.
/// Source failures are rethrown with the failing height as position.
class BlockStream {
 public:
  BlockStream(ChainSource& source, std::uint64_t start, std::uint64_t end);

  std::optional<HeightBlock> next();
  std::uint64_t start() const { return start_; }
  std::uint64_t end() const { return end_; }

 private:
  ChainSource* source_;
  std::uint64_t start_;
  std::uint64_t end_;
  std::uint64_t cursor_;
  Hash256 previous_;
  bool done_ = false;
};

/// Validates 0 <= start <= end <= best_height; defaults cover the whole chain.
BlockStream iterate(ChainSource& source, std::optional<std::uint64_t> start = std::nullopt,
                    std::optional<std::uint64_t> end = std::nullopt);

}  // namespace chainview
