#include "support.hpp"

#include "chainview/parser.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <arpa/inet.h>
#include <gmp.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <httplib.h>
#include <json.hpp>
#include <openssl/ripemd.h>
#include <openssl/sha.h>

#ifndef CHAINVIEW_TESTDATA_DIR
#error "CHAINVIEW_TESTDATA_DIR must be defined"
#endif

namespace testsupport {

std::filesystem::path testdata(const std::string& name) {
  return std::filesystem::path(CHAINVIEW_TESTDATA_DIR) / name;
}

Bytes genesis_bytes() {
  std::string hex = read_text(testdata("genesis.hex"));
  while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
  return chainview::from_hex(hex);
}

std::array<std::uint8_t, 32> ossl_sha256d(ByteView data) {
  std::array<std::uint8_t, 32> once{}, twice{};
  SHA256(data.data(), data.size(), once.data());
  SHA256(once.data(), once.size(), twice.data());
  return twice;
}

std::array<std::uint8_t, 20> ossl_hash160(ByteView data) {
  std::array<std::uint8_t, 32> sha{};
  SHA256(data.data(), data.size(), sha.data());
  std::array<std::uint8_t, 20> out{};
  RIPEMD160(sha.data(), sha.size(), out.data());
  return out;
}

std::string gmp_base58check(std::uint8_t version, ByteView payload) {
  Bytes body{version};
  body.insert(body.end(), payload.begin(), payload.end());
  const auto check = ossl_sha256d(body);
  body.insert(body.end(), check.begin(), check.begin() + 4);

  mpz_t n;
  mpz_init(n);
  mpz_import(n, body.size(), 1, 1, 1, 0, body.data());
  std::string digits;
  if (mpz_sgn(n) != 0) {
    std::vector<char> buf(mpz_sizeinbase(n, 58) + 2);
    mpz_get_str(buf.data(), 58, n);
    digits = buf.data();
  }
  mpz_clear(n);

  // GMP's base-58 digits are 0-9A-Za-v; map them onto the Bitcoin alphabet.
  static const std::string gmp_digits =
      "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuv";
  static const std::string btc = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
  std::string out;
  for (std::uint8_t b : body) {
    if (b != 0) break;
    out += '1';
  }
  for (char c : digits) out += btc[gmp_digits.find(c)];
  return out;
}

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("chainview-test-" + std::to_string(rd()) + std::to_string(rd()));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string basic_auth(const std::string& user, const std::string& password) {
  static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  const std::string in = user + ":" + password;
  std::string out;
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(in[i]) << 16) |
                       (static_cast<unsigned char>(in[i + 1]) << 8) |
                       static_cast<unsigned char>(in[i + 2]);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
  }
  if (i + 1 == in.size()) {
    const unsigned v = static_cast<unsigned char>(in[i]) << 16;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    const unsigned v = (static_cast<unsigned char>(in[i]) << 16) |
                       (static_cast<unsigned char>(in[i + 1]) << 8);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += '=';
  }
  return "Basic " + out;
}

void start(httplib::Server& server, int& port, std::thread& thread) {
  port = server.bind_to_any_port("127.0.0.1");
  thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
}

}  // namespace

RpcStub::RpcStub(std::vector<Bytes> payloads, std::string user, std::string password)
    : payloads_(std::move(payloads)),
      auth_header_(basic_auth(user, password)),
      server_(std::make_unique<httplib::Server>()) {
  for (const auto& p : payloads_) {
    hashes_.push_back(chainview::double_sha256(ByteView(p).first(80)).to_display_hex());
  }
  server_->Post("/", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    if (req.get_header_value("Authorization") != auth_header_) {
      res.status = 401;
      return;
    }
    if (!forced_body_.empty()) {
      res.set_content(forced_body_, "application/json");
      return;
    }
    using nlohmann::json;
    const json call = json::parse(req.body);
    json reply = {{"id", call.at("id")}, {"error", nullptr}, {"result", nullptr}};
    const std::string method = call.at("method");
    const json& params = call.at("params");
    auto fail = [&](int code, const std::string& msg) {
      reply["error"] = {{"code", code}, {"message", msg}};
      res.status = 500;
    };
    if (method == "getblockcount") {
      reply["result"] = payloads_.size() - 1;
    } else if (method == "getblockhash") {
      const auto h = params.at(0).get<std::int64_t>();
      if (h < 0 || static_cast<std::size_t>(h) >= payloads_.size()) {
        fail(-8, "Block height out of range");
      } else {
        reply["result"] = hashes_[static_cast<std::size_t>(h)];
      }
    } else if (method == "getblock") {
      const std::string hash = params.at(0);
      auto it = std::find(hashes_.begin(), hashes_.end(), hash);
      if (it == hashes_.end()) {
        fail(-5, "Block not found");
      } else {
        reply["result"] = chainview::to_hex(payloads_[static_cast<std::size_t>(it - hashes_.begin())]);
      }
    } else {
      fail(-32601, "Method not found");
    }
    res.set_content(reply.dump(), "application/json");
  });
  start(*server_, port_, thread_);
}

RpcStub::~RpcStub() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string RpcStub::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/"; }

RatesStub::RatesStub(std::map<std::string, double> rates)
    : rates_(std::move(rates)), server_(std::make_unique<httplib::Server>()) {
  server_->Get("/rates", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const std::string start = req.get_param_value("start");
    const std::string end = req.get_param_value("end");
    nlohmann::json bpi = nlohmann::json::object();
    for (auto it = rates_.lower_bound(start); it != rates_.end() && it->first <= end; ++it) {
      bpi[it->first] = it->second;
    }
    res.set_content(nlohmann::json{{"bpi", bpi}}.dump(), "application/json");
  });
  start(*server_, port_, thread_);
}

RatesStub::~RatesStub() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string RatesStub::url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/rates";
}

int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

FuzzOutcome fuzz_parse_block(std::uint64_t n, std::uint64_t seed, const std::vector<Bytes>& corpus) {
  std::mt19937_64 rng(seed);
  FuzzOutcome out;
  Bytes input;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto mode = corpus.empty() ? 0 : rng() % 4;
    if (mode == 0) {
      input.resize(rng() % 400);
      for (auto& b : input) b = static_cast<std::uint8_t>(rng());
    } else {
      input = corpus[rng() % corpus.size()];
      if (mode == 1) {
        // Flip a handful of bytes, biased towards the varint-heavy front.
        const auto flips = 1 + rng() % 8;
        for (std::uint64_t k = 0; k < flips; ++k) {
          const auto limit = (rng() % 2) ? std::min<std::size_t>(input.size(), 160) : input.size();
          input[rng() % limit] = static_cast<std::uint8_t>(rng());
        }
      } else if (mode == 2) {
        input.resize(rng() % input.size());
      } else {
        // Splice a large CompactSize into a random position.
        const auto pos = 80 + rng() % (input.size() - 80);
        const std::uint8_t prefix[] = {0xfd, 0xfe, 0xff};
        input[pos] = prefix[rng() % 3];
        for (std::size_t k = pos + 1; k < std::min(input.size(), pos + 9); ++k) input[k] = 0xff;
      }
    }
    ++out.inputs;
    try {
      chainview::parse_block(input);
      ++out.parsed;
    } catch (const chainview::Error&) {
      ++out.structured_errors;
    } catch (const std::exception& e) {
      if (out.unstructured++ == 0) out.first_unstructured = e.what();
    } catch (...) {
      if (out.unstructured++ == 0) out.first_unstructured = "non-standard exception";
    }
  }
  return out;
}

}  // namespace testsupport
