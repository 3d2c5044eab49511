#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chainview/chaingen.hpp"
#include "chainview/sink.hpp"
#include "chainview/views.hpp"

namespace chainview {

struct BenchRow {
  ViewKind view = ViewKind::Basic;
  SinkKind sink = SinkKind::Jsonl;
  bool supported = true;  // CSV cannot hold the basic view
  std::uint64_t records = 0;
  double create_seconds = 0;
  double query_seconds = 0;
  std::uintmax_t size_bytes = 0;
};

/// Builds every view into every sink under `dir`, then times one analytic
/// query per output: file sinks are read back and aggregated in process, SQL
/// scripts are loaded into SQLite and aggregated with GROUP BY.
std::vector<BenchRow> run_bench(const GeneratedChain& chain, const std::filesystem::path& dir);

std::string bench_table(const std::vector<BenchRow>& rows);

}  // namespace chainview
