#include "chainview/bench.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <sqlite3.h>

#include "chainview/analytics.hpp"

namespace chainview {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ViewReport build_into(ViewKind view, ChainSource& source, const GeneratedChain& chain,
                      const RateTable& rates, const TagMap& tags, RecordSink& sink) {
  sink.open(view_schema(view));
  ViewReport report;
  switch (view) {
    case ViewKind::Basic: report = build_basic(source, {}, sink); break;
    case ViewKind::OpReturn:
      report = build_opreturn(source, ScanRange{0, std::nullopt}, ProtocolTable::defaults(), sink);
      break;
    case ViewKind::Rates: report = build_rates(source, {}, rates, sink); break;
    case ViewKind::Fees: report = build_fees(source, std::nullopt, rates, sink); break;
    case ViewKind::Tags: report = build_tags(source, {}, tags, chain.truth.network, sink); break;
  }
  sink.close();
  return report;
}

std::uint64_t query_file(ViewKind view, const std::filesystem::path& path) {
  switch (view) {
    case ViewKind::Basic: return avg_io_by_date(read_view<BasicRecord>(path)).size();
    case ViewKind::OpReturn: return protocol_counts(read_view<OpReturnRecord>(path), 0).size();
    case ViewKind::Rates:
      return avg_output_by_rate_bucket(read_view<RatesRecord>(path)).buckets.size();
    case ViewKind::Fees: {
      const auto records = read_view<FeesRecord>(path);
      return records.empty() ? 0 : whale_transactions(records).whales.size();
    }
    case ViewKind::Tags:
      return daily_tx_to_tag_prefix(read_view<TagsRecord>(path), "SatoshiDICE").size();
  }
  return 0;
}

std::string sql_query(ViewKind view) {
  switch (view) {
    case ViewKind::Basic:
      return "SELECT date, COUNT(*), SUM(json_array_length(inputs)), "
             "SUM(json_array_length(outputs)) FROM myblockchain GROUP BY date";
    case ViewKind::OpReturn:
      return "SELECT protocol, COUNT(*) AS n FROM opreturnoutputs GROUP BY protocol "
             "ORDER BY n DESC";
    case ViewKind::Rates:
      return "SELECT CAST(rate / 300 AS INTEGER) AS b, AVG(outputSum) FROM txwithrates "
             "GROUP BY b";
    case ViewKind::Fees:
      return "SELECT AVG(fee * rate / 1e8) FROM txwithfees";
    case ViewKind::Tags:
      return "SELECT date, COUNT(DISTINCT txHash) FROM tagsoutputs "
             "WHERE tag LIKE 'SatoshiDICE%' GROUP BY date";
  }
  return {};
}

std::uint64_t query_sql(ViewKind view, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  sqlite3* raw = nullptr;
  sqlite3_open(":memory:", &raw);
  std::unique_ptr<sqlite3, decltype(&sqlite3_close)> db(raw, &sqlite3_close);
  char* err = nullptr;
  if (sqlite3_exec(db.get(), ss.str().c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(Errc::ParseError, path.string() + ": " + msg);
  }
  std::uint64_t rows = 0;
  auto count = [](void* n, int, char**, char**) {
    ++*static_cast<std::uint64_t*>(n);
    return 0;
  };
  if (sqlite3_exec(db.get(), sql_query(view).c_str(), count, &rows, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(Errc::ParseError, "bench query: " + msg);
  }
  return rows;
}

}  // namespace

std::vector<BenchRow> run_bench(const GeneratedChain& chain, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const RateTable rates = synthetic_rates(chain.truth);
  TagMap tags;
  for (const auto& [address, tag] : chain.truth.tag_addresses) tags.insert(address, tag);

  std::vector<BenchRow> out;
  for (ViewKind view : {ViewKind::Basic, ViewKind::OpReturn, ViewKind::Rates, ViewKind::Fees,
                        ViewKind::Tags}) {
    for (SinkKind kind : {SinkKind::Jsonl, SinkKind::Csv, SinkKind::Sql}) {
      BenchRow row{view, kind};
      if (kind == SinkKind::Csv && view_schema(view).has_nested()) {
        row.supported = false;
        out.push_back(row);
        continue;
      }
      const auto path =
          dir / (std::string(view_name(view)) + std::string(sink_extension(kind)));
      MemorySource source(chain.blocks);
      auto sink = make_sink(kind, path);
      auto t0 = Clock::now();
      const ViewReport report = build_into(view, source, chain, rates, tags, *sink);
      row.create_seconds = seconds_since(t0);
      row.records = report.records_written;
      row.size_bytes = std::filesystem::file_size(path);

      t0 = Clock::now();
      if (kind == SinkKind::Sql) {
        query_sql(view, path);
      } else {
        query_file(view, path);
      }
      row.query_seconds = seconds_since(t0);
      out.push_back(row);
    }
  }
  return out;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::string out = "view,sink,records,create_s,query_s,size_bytes\n";
  char buf[256];
  for (const auto& r : rows) {
    const std::string sink(sink_extension(r.sink).substr(1));
    if (!r.supported) {
      std::snprintf(buf, sizeof buf, "%s,%s,unsupported,,,\n", view_name(r.view).data(),
                    sink.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.3f,%.3f,%llu\n", view_name(r.view).data(),
                    sink.c_str(), static_cast<unsigned long long>(r.records), r.create_seconds,
                    r.query_seconds, static_cast<unsigned long long>(r.size_bytes));
    }
    out += buf;
  }
  return out;
}

}  // namespace chainview
