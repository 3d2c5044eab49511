#include "chainview/sources.hpp"

#include <algorithm>
#include <map>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"

namespace chainview {

namespace {

Hash256 header_hash(ByteView payload) {
  if (payload.size() < BlockHeader::kSize) {
    throw Error(Errc::Truncated, "block payload shorter than a header");
  }
  return double_sha256(payload.first(BlockHeader::kSize));
}

}  // namespace

// MemorySource ----------------------------------------------------------------

MemorySource::MemorySource(std::vector<Bytes> payloads) : payloads_(std::move(payloads)) {
  hashes_.reserve(payloads_.size());
  for (std::size_t i = 0; i < payloads_.size(); ++i) {
    hashes_.push_back(header_hash(payloads_[i]));
    by_hash_.emplace(hashes_.back(), i);
  }
}

std::uint64_t MemorySource::best_height() {
  if (payloads_.empty()) throw Error(Errc::RangeError, "empty chain");
  return payloads_.size() - 1;
}

Hash256 MemorySource::hash_at(std::uint64_t height) {
  if (height >= hashes_.size()) {
    throw Error(Errc::RangeError, "height " + std::to_string(height) + " beyond tip", height);
  }
  return hashes_[height];
}

Block MemorySource::block_by_hash(const Hash256& hash) {
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) throw Error(Errc::UnknownBlock, "unknown block " + hash.to_display_hex());
  return parse_block(payloads_[it->second]);
}

// File index ------------------------------------------------------------------

std::vector<std::filesystem::path> list_block_files(const std::filesystem::path& dir) {
  std::error_code ec;
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".dat" || ext == ".blk") out.push_back(entry.path());
  }
  if (ec) throw Error(Errc::Io, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

FileIndex build_file_index(std::vector<std::filesystem::path> paths,
                           std::optional<Hash256> genesis,
                           std::array<std::uint8_t, 4> magic) {
  std::sort(paths.begin(), paths.end());
  FileIndex index;
  index.files = paths;

  struct Node {
    Hash256 prev;
    std::size_t seen = 0;
  };
  std::unordered_map<Hash256, Node> nodes;
  std::vector<Hash256> seen_order;

  // Pass 1: headers, locations and prev-links.
  for (std::size_t f = 0; f < paths.size(); ++f) {
    BlockFileReader reader(paths[f], magic);
    while (auto rec = reader.next_record()) {
      ByteCursor cursor(rec->payload, rec->payload_offset);
      const BlockHeader header = parse_header(cursor);
      const Hash256 hash = header_hash(rec->payload);
      if (nodes.contains(hash)) {
        index.warnings.push_back(Warning{Errc::DuplicateKey,
                                         "block " + hash.to_display_hex() + " stored twice",
                                         rec->payload_offset});
        continue;
      }
      nodes.emplace(hash, Node{header.prev_hash, seen_order.size()});
      seen_order.push_back(hash);
      index.by_hash.emplace(hash, BlockLocation{f, rec->payload_offset});
    }
  }

  if (!genesis) {
    for (const auto& h : seen_order) {
      if (nodes.at(h).prev.is_null()) {
        genesis = h;
        break;
      }
    }
  }
  if (!genesis || !nodes.contains(*genesis)) {
    throw Error(Errc::GenesisNotFound, "genesis block not present in the indexed files");
  }

  // Pass 2: children in first-seen order, then longest descendant chain.
  std::unordered_map<Hash256, std::vector<Hash256>> children;
  for (const auto& h : seen_order) {
    if (h == *genesis) continue;
    children[nodes.at(h).prev].push_back(h);
  }

  std::vector<Hash256> order{*genesis};
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (auto it = children.find(order[i]); it != children.end()) {
      order.insert(order.end(), it->second.begin(), it->second.end());
    }
  }
  std::unordered_map<Hash256, std::uint64_t> depth;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    std::uint64_t best = 0;
    if (auto c = children.find(*it); c != children.end()) {
      for (const auto& child : c->second) best = std::max(best, depth.at(child));
    }
    depth[*it] = best + 1;
  }

  Hash256 cursor = *genesis;
  index.main_chain.push_back(cursor);
  for (;;) {
    auto c = children.find(cursor);
    if (c == children.end() || c->second.empty()) break;
    const Hash256* pick = &c->second.front();
    for (const auto& child : c->second) {
      if (depth.at(child) > depth.at(*pick)) pick = &child;
    }
    cursor = *pick;
    index.main_chain.push_back(cursor);
  }
  index.orphans = seen_order.size() - index.main_chain.size();
  return index;
}

std::uint64_t FileSource::best_height() { return index_.main_chain.size() - 1; }

Hash256 FileSource::hash_at(std::uint64_t height) {
  if (height >= index_.main_chain.size()) {
    throw Error(Errc::RangeError, "height " + std::to_string(height) + " beyond tip", height);
  }
  return index_.main_chain[height];
}

Block FileSource::block_by_hash(const Hash256& hash) {
  auto it = index_.by_hash.find(hash);
  if (it == index_.by_hash.end()) {
    throw Error(Errc::UnknownBlock, "unknown block " + hash.to_display_hex());
  }
  const auto& loc = it->second;
  return parse_block(read_block_payload(index_.files[loc.file], loc.payload_offset));
}

// RPC -------------------------------------------------------------------------

struct RpcSource::Impl {
  detail::UrlParts url;
  RpcCredentials credentials;
  httplib::Client client;
  std::uint64_t next_id = 0;

  Impl(std::string_view endpoint, RpcCredentials creds)
      : url(detail::split_url(endpoint)), credentials(std::move(creds)), client(url.scheme_host_port) {
    client.set_basic_auth(credentials.user, credentials.password);
    client.set_connection_timeout(5);
    client.set_read_timeout(60);
  }

  nlohmann::json call(const std::string& method, nlohmann::json params) {
    nlohmann::json request = {{"jsonrpc", "1.0"},
                              {"id", "chainview-" + std::to_string(next_id++)},
                              {"method", method},
                              {"params", std::move(params)}};
    auto res = client.Post(url.path, request.dump() + "\n", "application/json");
    if (!res) {
      throw Error(Errc::Unreachable, method + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(Errc::AuthFailed, method + ": HTTP " + std::to_string(res->status));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::ParseError,
                  method + ": HTTP " + std::to_string(res->status) + " with non-JSON body");
    }
    if (reply.contains("error") && !reply["error"].is_null()) {
      const auto& err = reply["error"];
      const int code = err.value("code", 0);
      throw Error(Errc::RpcError,
                  method + ": code " + std::to_string(code) + ": " + err.value("message", ""));
    }
    if (res->status != 200) {
      throw Error(Errc::RpcError, method + ": HTTP " + std::to_string(res->status));
    }
    return reply.at("result");
  }
};

RpcSource::RpcSource(std::string url, RpcCredentials credentials)
    : impl_(std::make_unique<Impl>(url, std::move(credentials))) {}

RpcSource::~RpcSource() = default;

std::uint64_t RpcSource::best_height() {
  return impl_->call("getblockcount", nlohmann::json::array()).get<std::uint64_t>();
}

Hash256 RpcSource::hash_at(std::uint64_t height) {
  const auto result = impl_->call("getblockhash", nlohmann::json::array({height}));
  try {
    return Hash256::from_display_hex(result.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("getblockhash: ") + e.what(), height);
  }
}

Block RpcSource::block_by_hash(const Hash256& hash) {
  const auto result =
      impl_->call("getblock", nlohmann::json::array({hash.to_display_hex(), 0}));
  Block block;
  try {
    block = parse_block(from_hex(result.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("getblock: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::ParseError, std::string("getblock payload: ") + errc_name(e.code()).data() + ": " + e.detail(), e.position());
  }
  if (block.hash != hash) {
    throw Error(Errc::ParseError, "getblock returned block " + block.hash.to_display_hex() +
                                      " for " + hash.to_display_hex());
  }
  return block;
}

std::unique_ptr<ChainSource> rpc_source(std::string url, RpcCredentials credentials) {
  return std::make_unique<RpcSource>(std::move(url), std::move(credentials));
}

// Iteration -------------------------------------------------------------------

BlockStream::BlockStream(ChainSource& source, std::uint64_t start, std::uint64_t end)
    : source_(&source), start_(start), end_(end), cursor_(start) {}

std::optional<HeightBlock> BlockStream::next() {
  if (done_) return std::nullopt;
  const std::uint64_t height = cursor_;
  HeightBlock out;
  try {
    const Hash256 hash = source_->hash_at(height);
    out.block = source_->block_by_hash(hash);
    if (out.block.hash != hash) {
      throw Error(Errc::ParseError, "source returned a different block than requested");
    }
    if (height > start_ && out.block.header.prev_hash != previous_) {
      throw Error(Errc::ParseError, "block does not link to its predecessor");
    }
  } catch (const Error& e) {
    done_ = true;
    throw Error(e.code(), "at height " + std::to_string(height) + ": " + e.detail(), height);
  }
  previous_ = out.block.hash;
  out.height = height;
  out.block.height = height;
  if (cursor_ == end_) {
    done_ = true;
  } else {
    ++cursor_;
  }
  return out;
}

BlockStream iterate(ChainSource& source, std::optional<std::uint64_t> start,
                    std::optional<std::uint64_t> end) {
  const std::uint64_t best = source.best_height();
  const std::uint64_t s = start.value_or(0);
  const std::uint64_t e = end.value_or(best);
  if (s > e || e > best) {
    throw Error(Errc::RangeError,
                "range [" + std::to_string(s) + ", " + std::to_string(e) +
                    "] outside chain [0, " + std::to_string(best) + "]",
                s);
  }
  return BlockStream(source, s, e);
}

}  // namespace chainview
