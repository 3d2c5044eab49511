#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "chainview/core.hpp"
#include "chainview/hash.hpp"

namespace httplib {
class Server;
}

namespace testsupport {

using chainview::ByteView;
using chainview::Bytes;

std::filesystem::path testdata(const std::string& name);
Bytes genesis_bytes();

// Oracles built on OpenSSL and GMP, independent of the library's own code.
std::array<std::uint8_t, 32> ossl_sha256d(ByteView data);
std::array<std::uint8_t, 20> ossl_hash160(ByteView data);
std::string gmp_base58check(std::uint8_t version, ByteView payload);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, ByteView bytes);
void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Serves getblockcount / getblockhash / getblock(verbosity 0) over an
// in-memory chain with Basic auth, on a loopback port.
class RpcStub {
 public:
  RpcStub(std::vector<Bytes> payloads, std::string user, std::string password);
  ~RpcStub();

  std::string url() const;
  std::uint64_t requests() const { return requests_; }
  // Next reply to every call is this raw body (with HTTP 200), when set.
  void force_body(std::string body) { forced_body_ = std::move(body); }

 private:
  std::vector<Bytes> payloads_;
  std::vector<std::string> hashes_;
  std::string auth_header_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::uint64_t> requests_{0};
  std::string forced_body_;
};

// Coindesk-shaped rate endpoint: GET /rates?start=D&end=D -> {"bpi":{D:rate}}.
class RatesStub {
 public:
  explicit RatesStub(std::map<std::string, double> rates);
  ~RatesStub();

  std::string url() const;
  std::uint64_t requests() const { return requests_; }

 private:
  std::map<std::string, double> rates_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::uint64_t> requests_{0};
};

// A loopback port with nothing listening on it.
int closed_port();

// Feeds parse_block random buffers, mutated copies of `corpus` and truncations.
// Every input must either parse or throw chainview::Error; anything else is
// counted as unstructured and the first such message kept.
struct FuzzOutcome {
  std::uint64_t inputs = 0;
  std::uint64_t parsed = 0;
  std::uint64_t structured_errors = 0;
  std::uint64_t unstructured = 0;
  std::string first_unstructured;
};
FuzzOutcome fuzz_parse_block(std::uint64_t n, std::uint64_t seed, const std::vector<Bytes>& corpus);

}  // namespace testsupport
