#include "chainview/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"

namespace chainview {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

// Rate ------------------------------------------------------------------------

Rate Rate::from_double(double usd) {
  if (!(usd >= 0.0) || !std::isfinite(usd)) {
    throw Error(Errc::ParseError, "rate must be a finite non-negative number");
  }
  return from_units(std::llround(usd * static_cast<double>(kScale)));
}

Rate Rate::parse(std::string_view text) {
  text = trim(text);
  const auto bad = [&] {
    return Error(Errc::ParseError, "malformed rate '" + std::string(text) + "'");
  };
  if (text.empty()) throw bad();
  std::int64_t whole = 0;
  std::size_t i = 0;
  bool any_digit = false;
  for (; i < text.size() && text[i] != '.'; ++i) {
    if (text[i] < '0' || text[i] > '9') throw bad();
    if (whole > (INT64_MAX / kScale) / 10) throw bad();
    whole = whole * 10 + (text[i] - '0');
    any_digit = true;
  }
  std::int64_t frac = 0;
  std::int64_t scale = kScale;
  bool round_up = false;
  if (i < text.size()) {
    ++i;
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') throw bad();
      any_digit = true;
      if (scale > 1) {
        scale /= 10;
        frac += (text[i] - '0') * scale;
      } else if (scale == 1) {
        round_up = text[i] >= '5';
        scale = 0;
      }
    }
  }
  if (!any_digit) throw bad();
  return from_units(whole * kScale + frac + (round_up ? 1 : 0));
}

std::string Rate::to_string() const {
  const std::uint64_t mag = units_ < 0 ? 0 - static_cast<std::uint64_t>(units_)
                                       : static_cast<std::uint64_t>(units_);
  const std::uint64_t whole = mag / kScale;
  const std::uint64_t frac = mag % kScale;
  std::string out = (units_ < 0 ? "-" : "") + std::to_string(whole);
  out += '.';
  if (frac == 0) return out + "0";
  char digits[24];
  std::snprintf(digits, sizeof digits, "%08llu", static_cast<unsigned long long>(frac));
  std::string_view f(digits, 8);
  while (f.size() > 1 && f.back() == '0') f.remove_suffix(1);
  out += f;
  return out;
}

// RateTable -------------------------------------------------------------------

RateTable::RateTable(RateTable&&) noexcept = default;
RateTable& RateTable::operator=(RateTable&&) noexcept = default;

RateTable RateTable::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open rates file " + path.string());
  RateTable table;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    if (line_no == 1 && l.starts_with("date")) continue;
    const auto comma = l.find(',');
    if (comma == std::string_view::npos) {
      throw Error(Errc::MalformedLine, path.string() + ": expected date,rate", line_no);
    }
    try {
      table.set(Date::parse(l.substr(0, comma)), Rate::parse(l.substr(comma + 1)));
    } catch (const Error& e) {
      throw Error(Errc::MalformedLine, path.string() + ": " + e.what(), line_no);
    }
  }
  return table;
}

RateTable RateTable::from_http(std::string base_url, std::filesystem::path cache_path) {
  RateTable table;
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) table = from_csv(cache_path);
  table.base_url_ = std::move(base_url);
  table.cache_path_ = std::move(cache_path);
  return table;
}

void RateTable::set(Date date, Rate rate) {
  if (rate.units() < 0) throw Error(Errc::ParseError, "negative rate for " + date.to_string());
  rates_[date] = rate;
}

bool RateTable::covers(Date date) const { return rates_.contains(date); }

std::size_t RateTable::size() const { return rates_.size(); }

std::map<Date, Rate> RateTable::entries() const { return rates_; }

Rate RateTable::get(Date date) const {
  if (auto it = rates_.find(date); it != rates_.end()) return it->second;
  if (base_url_.empty()) {
    throw Error(Errc::DateNotCovered, "no exchange rate for " + date.to_string());
  }
  return fetch(date);
}

Rate RateTable::fetch(Date date) const {
  std::lock_guard lock(*fetch_mutex_);
  if (auto it = rates_.find(date); it != rates_.end()) return it->second;

  const auto url = detail::split_url(base_url_);
  httplib::Client client(url.scheme_host_port);
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  const std::string day = date.to_string();
  const char sep = url.path.find('?') == std::string::npos ? '?' : '&';
  const std::string target = url.path + sep + "start=" + day + "&end=" + day;
  auto res = client.Get(target);
  if (!res) {
    throw Error(Errc::FetchFailed, "rate endpoint unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(Errc::FetchFailed, "rate endpoint returned HTTP " + std::to_string(res->status));
  }
  Rate rate;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    const auto& bpi = doc.at("bpi");
    if (!bpi.contains(day)) {
      throw Error(Errc::DateNotCovered, "rate endpoint has no entry for " + day);
    }
    rate = Rate::from_double(bpi.at(day).get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::FetchFailed, std::string("malformed rate response: ") + e.what());
  }
  rates_[date] = rate;

  if (!cache_path_.empty()) {
    const bool fresh = !std::filesystem::exists(cache_path_);
    std::ofstream out(cache_path_, std::ios::app);
    if (!out) throw Error(Errc::Io, "cannot write rate cache " + cache_path_.string());
    if (fresh) out << "date,rate\n";
    out << day << ',' << rate.to_string() << '\n';
  }
  return rate;
}

void RateTable::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "date,rate\n";
  for (const auto& [date, rate] : rates_) out << date.to_string() << ',' << rate.to_string() << '\n';
}

// Tags ------------------------------------------------------------------------

void TagMap::insert(std::string address, std::string tag) {
  tags_.emplace(std::move(address), std::move(tag));
}

const std::string* TagMap::find(std::string_view address) const {
  auto it = tags_.find(std::string(address));
  return it == tags_.end() ? nullptr : &it->second;
}

TagMap load_tags(const std::filesystem::path& path, Warnings* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open tags file " + path.string());
  TagMap map;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw Error(Errc::MalformedLine, path.string() + ": expected address<TAB>tag", line_no);
    }
    std::string address = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    if (map.find(address)) {
      if (warnings) {
        warnings->push_back(
            Warning{Errc::DuplicateKey, "duplicate tag for " + address + " ignored", line_no});
      }
      continue;
    }
    map.insert(std::move(address), std::move(tag));
  }
  return map;
}

// OP_RETURN -------------------------------------------------------------------

bool is_op_return(const Script& script) {
  return !script.bytes.empty() && script.bytes.front() == kOpReturn;
}

Bytes extract_metadata(const Script& script) {
  Bytes out;
  if (!is_op_return(script)) return out;
  const Bytes& s = script.bytes;
  std::size_t i = 1;
  while (i < s.size()) {
    const std::uint8_t op = s[i++];
    std::size_t len = 0;
    if (op <= 0x4B) {
      len = op;
    } else if (op >= 0x4C && op <= 0x4E) {
      const std::size_t width = op == 0x4C ? 1 : (op == 0x4D ? 2 : 4);
      if (i + width > s.size()) {
        throw Error(Errc::MalformedPush, "push length field overruns script", i);
      }
      for (std::size_t k = 0; k < width; ++k) len |= std::size_t{s[i + k]} << (8 * k);
      i += width;
    } else {
      break;
    }
    if (len > s.size() - i) {
      throw Error(Errc::MalformedPush,
                  "push of " + std::to_string(len) + " bytes overruns script", i);
    }
    out.insert(out.end(), s.begin() + static_cast<std::ptrdiff_t>(i),
               s.begin() + static_cast<std::ptrdiff_t>(i + len));
    i += len;
  }
  return out;
}

ProtocolTable ProtocolTable::defaults() {
  const std::pair<const char*, const char*> rows[] = {
      {"6f6d6e69", "omni"},                                 // "omni"
      {"4343", "colu"},                                     // "CC"
      {"53504b", "coinspark"},                              // "SPK"
      {"4f41", "openassets"},                               // "OA"
      {"466163746f6d21", "factom"},                         // "Factom!"
      {"4641", "factom"},                                   // "FA"
      {"5331", "stampery"},                                 // "S1"
      {"444f4350524f4f46", "proofofexistence"},             // "DOCPROOF"
      {"4253", "blocksign"},                                // "BS"
      {"4d4743", "monegraph"},                              // "MGC"
      {"4153435249424553504f4f4c", "ascribe"},              // "ASCRIBESPOOL"
      {"455720", "eternitywall"},                           // "EW "
      {"6964", "blockstore"},                               // "id"
      {"53422e", "smartbit"},                               // "SB."
  };
  std::vector<ProtocolRule> rules;
  for (const auto& [hex, name] : rows) rules.push_back({from_hex(hex), name});
  return ProtocolTable(std::move(rules));
}

ProtocolTable ProtocolTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open protocol rules " + path.string());
  std::vector<ProtocolRule> rules;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    if (l.starts_with("hex_prefix")) continue;
    const auto comma = l.find(',');
    if (comma == std::string_view::npos || comma == 0 || comma + 1 == l.size()) {
      throw Error(Errc::MalformedLine, path.string() + ": expected hex_prefix,name", line_no);
    }
    try {
      rules.push_back({from_hex(l.substr(0, comma)), std::string(trim(l.substr(comma + 1)))});
    } catch (const Error& e) {
      throw Error(Errc::MalformedLine, path.string() + ": " + e.what(), line_no);
    }
  }
  return ProtocolTable(std::move(rules));
}

std::string ProtocolTable::classify(ByteView metadata) const {
  for (const auto& rule : rules_) {
    if (rule.prefix.size() <= metadata.size() &&
        std::equal(rule.prefix.begin(), rule.prefix.end(), metadata.begin())) {
      return rule.name;
    }
  }
  return "unknown";
}

// Base58 ----------------------------------------------------------------------

namespace {

constexpr std::string_view kBase58Alphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

}  // namespace

std::string base58_encode(ByteView data) {
  std::size_t zeros = 0;
  while (zeros < data.size() && data[zeros] == 0) ++zeros;
  // log(256)/log(58) < 1.37
  std::vector<std::uint8_t> digits((data.size() - zeros) * 138 / 100 + 1);
  std::size_t length = 0;
  for (std::size_t i = zeros; i < data.size(); ++i) {
    int carry = data[i];
    std::size_t k = 0;
    for (auto it = digits.rbegin(); (carry != 0 || k < length) && it != digits.rend(); ++it, ++k) {
      carry += 256 * (*it);
      *it = static_cast<std::uint8_t>(carry % 58);
      carry /= 58;
    }
    length = k;
  }
  auto it = digits.begin() + static_cast<std::ptrdiff_t>(digits.size() - length);
  std::string out(zeros, '1');
  for (; it != digits.end(); ++it) out += kBase58Alphabet[*it];
  return out;
}

std::optional<Bytes> base58_decode(std::string_view text) {
  std::size_t ones = 0;
  while (ones < text.size() && text[ones] == '1') ++ones;
  std::vector<std::uint8_t> bytes((text.size() - ones) * 733 / 1000 + 1);
  std::size_t length = 0;
  for (std::size_t i = ones; i < text.size(); ++i) {
    const auto pos = kBase58Alphabet.find(text[i]);
    if (pos == std::string_view::npos) return std::nullopt;
    int carry = static_cast<int>(pos);
    std::size_t k = 0;
    for (auto it = bytes.rbegin(); (carry != 0 || k < length) && it != bytes.rend(); ++it, ++k) {
      carry += 58 * (*it);
      *it = static_cast<std::uint8_t>(carry % 256);
      carry /= 256;
    }
    length = k;
  }
  Bytes out(ones, 0);
  out.insert(out.end(), bytes.end() - static_cast<std::ptrdiff_t>(length), bytes.end());
  return out;
}

std::string base58check_encode(std::uint8_t version, ByteView payload) {
  Bytes data;
  data.reserve(1 + payload.size() + 4);
  data.push_back(version);
  data.insert(data.end(), payload.begin(), payload.end());
  const auto check = sha256d(data);
  data.insert(data.end(), check.begin(), check.begin() + 4);
  return base58_encode(data);
}

std::optional<std::pair<std::uint8_t, Bytes>> base58check_decode(std::string_view text) {
  auto data = base58_decode(text);
  if (!data || data->size() < 5) return std::nullopt;
  const ByteView body(data->data(), data->size() - 4);
  const auto check = sha256d(body);
  if (!std::equal(check.begin(), check.begin() + 4, data->end() - 4)) return std::nullopt;
  return std::make_pair(body.front(), Bytes(body.begin() + 1, body.end()));
}

std::uint8_t p2pkh_version(Network net) { return net == Network::Mainnet ? 0x00 : 0x6F; }
std::uint8_t p2sh_version(Network net) { return net == Network::Mainnet ? 0x05 : 0xC4; }

std::optional<std::string> address_of(const Script& script_pubkey, Network net) {
  const Bytes& s = script_pubkey.bytes;
  // OP_DUP OP_HASH160 <20> OP_EQUALVERIFY OP_CHECKSIG
  if (s.size() == 25 && s[0] == 0x76 && s[1] == 0xA9 && s[2] == 0x14 && s[23] == 0x88 &&
      s[24] == 0xAC) {
    return base58check_encode(p2pkh_version(net), ByteView(s.data() + 3, 20));
  }
  // OP_HASH160 <20> OP_EQUAL
  if (s.size() == 23 && s[0] == 0xA9 && s[1] == 0x14 && s[22] == 0x87) {
    return base58check_encode(p2sh_version(net), ByteView(s.data() + 2, 20));
  }
  // <pubkey> OP_CHECKSIG
  if ((s.size() == 35 && s[0] == 33 && s[34] == 0xAC) ||
      (s.size() == 67 && s[0] == 65 && s[66] == 0xAC)) {
    const auto h = hash160(ByteView(s.data() + 1, s[0]));
    return base58check_encode(p2pkh_version(net), h);
  }
  return std::nullopt;
}

Script make_p2pkh(ByteView h160) {
  Script s;
  s.bytes = {0x76, 0xA9, 0x14};
  s.bytes.insert(s.bytes.end(), h160.begin(), h160.end());
  s.bytes.push_back(0x88);
  s.bytes.push_back(0xAC);
  return s;
}

Script make_p2sh(ByteView h160) {
  Script s;
  s.bytes = {0xA9, 0x14};
  s.bytes.insert(s.bytes.end(), h160.begin(), h160.end());
  s.bytes.push_back(0x87);
  return s;
}

Script make_p2pk(ByteView pubkey) {
  Script s;
  s.bytes.push_back(static_cast<std::uint8_t>(pubkey.size()));
  s.bytes.insert(s.bytes.end(), pubkey.begin(), pubkey.end());
  s.bytes.push_back(0xAC);
  return s;
}

Script make_op_return(ByteView metadata) {
  Script s;
  s.bytes.push_back(kOpReturn);
  if (metadata.empty()) return s;
  if (metadata.size() <= 0x4B) {
    s.bytes.push_back(static_cast<std::uint8_t>(metadata.size()));
  } else if (metadata.size() <= 0xFF) {
    s.bytes.push_back(0x4C);
    s.bytes.push_back(static_cast<std::uint8_t>(metadata.size()));
  } else {
    s.bytes.push_back(0x4D);
    s.bytes.push_back(static_cast<std::uint8_t>(metadata.size() & 0xFF));
    s.bytes.push_back(static_cast<std::uint8_t>(metadata.size() >> 8));
  }
  s.bytes.insert(s.bytes.end(), metadata.begin(), metadata.end());
  return s;
}

}  // namespace chainview
