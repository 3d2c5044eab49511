#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainview/core.hpp"
#include "chainview/enrichment.hpp"
#include "chainview/error.hpp"
#include "chainview/sink.hpp"
#include "chainview/sources.hpp"

namespace chainview {

struct BasicInput {
  std::string prevTxHash;
  std::int64_t prevVout = 0;
  std::string scriptSig;

  friend auto operator<=>(const BasicInput&, const BasicInput&) = default;
};

struct BasicOutput {
  std::int64_t value = 0;
  std::string scriptPubKey;

  friend auto operator<=>(const BasicOutput&, const BasicOutput&) = default;
};

struct BasicRecord {
  std::string txHash;
  std::string blockHash;
  Date date;
  std::vector<BasicInput> inputs;
  std::vector<BasicOutput> outputs;

  static const ViewSchema& schema();
  Row to_row() const;
  static BasicRecord from_row(const Row& row);
  friend auto operator<=>(const BasicRecord&, const BasicRecord&) = default;
};

struct OpReturnRecord {
  std::string txHash;
  Date date;
  std::string protocol;
  std::string metadata;  // hex

  static const ViewSchema& schema();
  Row to_row() const;
  static OpReturnRecord from_row(const Row& row);
  friend auto operator<=>(const OpReturnRecord&, const OpReturnRecord&) = default;
};

struct RatesRecord {
  std::string txHash;
  Date date;
  std::int64_t outputSum = 0;
  Rate rate;

  static const ViewSchema& schema();
  Row to_row() const;
  static RatesRecord from_row(const Row& row);
  friend auto operator<=>(const RatesRecord&, const RatesRecord&) = default;
};

struct FeesRecord {
  std::string blockHash;
  std::string txHash;
  std::int64_t fee = 0;
  Date date;
  Rate rate;

  static const ViewSchema& schema();
  Row to_row() const;
  static FeesRecord from_row(const Row& row);
  friend auto operator<=>(const FeesRecord&, const FeesRecord&) = default;
};

struct TagsRecord {
  std::string txHash;
  Date date;
  std::int64_t value = 0;
  std::string address;
  std::string tag;

  static const ViewSchema& schema();
  Row to_row() const;
  static TagsRecord from_row(const Row& row);
  friend auto operator<=>(const TagsRecord&, const TagsRecord&) = default;
};

enum class ViewKind { Basic, OpReturn, Rates, Fees, Tags };

ViewKind parse_view_kind(std::string_view name);
std::string_view view_name(ViewKind kind);
const ViewSchema& view_schema(ViewKind kind);

/// Reads every record of type R from a sink output file (dispatch on extension).
template <typename R>
std::vector<R> read_view(const std::filesystem::path& path) {
  std::vector<R> out;
  read_records(path, R::schema(), [&](Row&& row) { out.push_back(R::from_row(row)); });
  return out;
}

struct ScanRange {
  std::optional<std::uint64_t> start;
  std::optional<std::uint64_t> end;
};

struct ViewReport {
  std::string view;
  std::uint64_t records_written = 0;
  std::uint64_t blocks = 0;
  std::uint64_t txs = 0;
  std::optional<std::uint64_t> first_height;
  std::optional<std::uint64_t> last_height;
  Warnings warnings;
};

std::string view_report_json(const ViewReport& report);

inline constexpr std::uint64_t kOpReturnDefaultStart = 290'000;

// Builders write into a sink the caller has opened with the view's schema and
// will close afterwards. Records stream; nothing is held per view.

ViewReport build_basic(ChainSource& source, const ScanRange& range, RecordSink& sink);

/// Without an explicit start the scan begins at 290,000, clamped to the tip
/// (with a Clamped warning) on shorter chains.
ViewReport build_opreturn(ChainSource& source, const ScanRange& range,
                          const ProtocolTable& protocols, RecordSink& sink);

/// Throws DateNotCovered naming the first block date missing from `rates`.
ViewReport build_rates(ChainSource& source, const ScanRange& range, const RateTable& rates,
                       RecordSink& sink);

/// Deep scan from height 0; `end` bounds the scan.
ViewReport build_fees(ChainSource& source, std::optional<std::uint64_t> end,
                      const RateTable& rates, RecordSink& sink);

ViewReport build_tags(ChainSource& source, const ScanRange& range, const TagMap& tags,
                      Network network, RecordSink& sink);

}  // namespace chainview
