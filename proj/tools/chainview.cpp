#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chainview/analytics.hpp"
#include "chainview/bench.hpp"
#include "chainview/chaingen.hpp"
#include "chainview/navigator.hpp"
#include "chainview/sources.hpp"
#include "chainview/views.hpp"

using namespace chainview;

namespace {

struct SourceOptions {
  std::string kind = "files";
  std::string blocks_dir;
  std::string rpc_url = "http://127.0.0.1:8332/";
  std::string network = "mainnet";
  std::string genesis;
  std::uint64_t seed = 42;
  std::uint32_t gen_blocks = 100;
  std::optional<std::uint64_t> start;
  std::optional<std::uint64_t> end;
};

void add_source_flags(CLI::App* cmd, SourceOptions& o, bool with_start = true) {
  cmd->add_option("--source", o.kind, "Block source")
      ->check(CLI::IsMember({"files", "rpc", "synthetic"}))
      ->capture_default_str();
  cmd->add_option("--blocks-dir", o.blocks_dir, "Directory of blk*.dat files (files source)");
  cmd->add_option("--rpc-url", o.rpc_url,
                  "JSON-RPC endpoint; credentials from CHAINVIEW_RPC_USER / CHAINVIEW_RPC_PASS")
      ->capture_default_str();
  cmd->add_option("--network", o.network, "mainnet, testnet or regtest")
      ->check(CLI::IsMember({"mainnet", "testnet", "regtest"}))
      ->capture_default_str();
  cmd->add_option("--genesis", o.genesis, "Genesis hash (files source; default: first root)");
  cmd->add_option("--seed", o.seed, "Seed (synthetic source)")->capture_default_str();
  cmd->add_option("--gen-blocks", o.gen_blocks, "Chain length (synthetic source)")
      ->capture_default_str();
  if (with_start) cmd->add_option("--start", o.start, "First height");
  cmd->add_option("--end", o.end, "Last height (inclusive)");
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::move(fallback);
}

// A source plus the network its addresses belong to.
struct OpenedSource {
  std::unique_ptr<ChainSource> source;
  Network network = Network::Mainnet;
};

OpenedSource open_source(const SourceOptions& o) {
  OpenedSource out;
  out.network = parse_network(o.network);
  if (o.kind == "rpc") {
    out.source = rpc_source(o.rpc_url, RpcCredentials{env_or("CHAINVIEW_RPC_USER", ""),
                                                      env_or("CHAINVIEW_RPC_PASS", "")});
  } else if (o.kind == "synthetic") {
    GenSpec spec;
    spec.seed = o.seed;
    spec.n_blocks = o.gen_blocks;
    GeneratedChain chain = generate(spec);
    out.network = chain.truth.network;
    out.source = std::make_unique<MemorySource>(std::move(chain.blocks));
  } else {
    if (o.blocks_dir.empty()) throw CLI::ValidationError("--blocks-dir", "required for files");
    std::optional<Hash256> genesis;
    if (!o.genesis.empty()) genesis = Hash256::from_display_hex(o.genesis);
    FileIndex index = build_file_index(list_block_files(o.blocks_dir), genesis,
                                       network_magic(out.network));
    for (const auto& w : index.warnings) {
      std::cerr << "warning: " << errc_name(w.code) << ": " << w.message << '\n';
    }
    out.source = std::make_unique<FileSource>(std::move(index));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
}

RateTable load_rates(const std::string& path, const std::string& cache) {
  if (!path.empty()) return RateTable::from_csv(path);
  const std::string url = env_or("CHAINVIEW_RATES_URL", "");
  if (url.empty()) {
    throw CLI::ValidationError("--rates", "give a rates CSV or set CHAINVIEW_RATES_URL");
  }
  return RateTable::from_http(url, cache);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build analytic views of a Bitcoin blockchain"};
  app.require_subcommand(1);

  // gen ------------------------------------------------------------------
  GenSpec spec;
  std::string gen_out, gen_truth, gen_tags, gen_rates, gen_network = "regtest";
  std::optional<std::uint32_t> fork_at;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic chain as a blk file");
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--blocks", spec.n_blocks)->capture_default_str();
  gen->add_option("--out", gen_out, "Block file path")->required();
  gen->add_option("--truth", gen_truth, "Ground truth JSON path");
  gen->add_option("--tags", gen_tags, "Write the tagged-address file here");
  gen->add_option("--rates", gen_rates, "Write a synthetic rates CSV here");
  gen->add_option("--max-txs", spec.max_txs_per_block)->capture_default_str();
  gen->add_option("--fork-at", fork_at, "Add a one-block side branch at this height");
  gen->add_option("--network", gen_network)
      ->check(CLI::IsMember({"mainnet", "testnet", "regtest"}))
      ->capture_default_str();

  // scan -----------------------------------------------------------------
  SourceOptions scan_src;
  auto* scan = app.add_subcommand("scan", "Deep scan from genesis and print a JSON report");
  add_source_flags(scan, scan_src, false);

  // build ----------------------------------------------------------------
  SourceOptions build_src;
  std::string view, sink_name = "jsonl", build_out, rates_path, rates_cache = "rates-cache.csv",
                    tags_path, protocols_path;
  auto* build = app.add_subcommand("build", "Materialize one view into a sink");
  build->add_option("view", view)
      ->required()
      ->check(CLI::IsMember({"basic", "opreturn", "rates", "fees", "tags"}));
  build->add_option("--sink", sink_name)
      ->check(CLI::IsMember({"jsonl", "csv", "sql"}))
      ->capture_default_str();
  build->add_option("--out", build_out)->required();
  build->add_option("--rates", rates_path, "Rates CSV (date,rate); else CHAINVIEW_RATES_URL");
  build->add_option("--rates-cache", rates_cache, "Cache for fetched rates")->capture_default_str();
  build->add_option("--tags", tags_path, "Tag file: address<TAB>tag");
  build->add_option("--protocols", protocols_path, "Protocol prefix CSV (hex_prefix,name)");
  add_source_flags(build, build_src);

  // analyze --------------------------------------------------------------
  std::string analysis, in_path, format = "csv", analyze_out, prefix = "SatoshiDICE";
  std::uint64_t min_count = 1000;
  std::int64_t bucket_width = 300;
  std::uint32_t n_buckets = 7;
  bool exclude_coinbase = false;
  auto* analyze = app.add_subcommand("analyze", "Run one analysis over a view file");
  analyze->add_option("analysis", analysis)
      ->required()
      ->check(CLI::IsMember({"avg-io", "protocols", "rate-buckets", "whales", "tag-daily"}));
  analyze->add_option("--in", in_path, "View file (.jsonl, .csv or .sql)")->required();
  analyze->add_option("--format", format)
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();
  analyze->add_option("--out", analyze_out, "Output path (default stdout)");
  analyze->add_option("--min-count", min_count)->capture_default_str();
  analyze->add_option("--bucket-width", bucket_width)->capture_default_str();
  analyze->add_option("--buckets", n_buckets)->capture_default_str();
  analyze->add_option("--prefix", prefix)->capture_default_str();
  analyze->add_flag("--exclude-coinbase", exclude_coinbase,
                    "Leave the first row of each block out of the whale statistics");

  // bench ----------------------------------------------------------------
  std::uint32_t bench_blocks = 10'000;
  std::uint64_t bench_seed = 7;
  std::string bench_dir = "bench-out";
  auto* bench = app.add_subcommand("bench", "Time every view on every sink");
  bench->add_option("--blocks", bench_blocks)->capture_default_str();
  bench->add_option("--seed", bench_seed)->capture_default_str();
  bench->add_option("--dir", bench_dir)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      spec.fork_at = fork_at;
      spec.network = parse_network(gen_network);
      const GeneratedChain chain = generate(spec);
      std::ofstream out(gen_out, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(Errc::Io, "cannot write " + gen_out);
      out.write(reinterpret_cast<const char*>(chain.block_file.data()),
                static_cast<std::streamsize>(chain.block_file.size()));
      if (!gen_truth.empty()) write_text(gen_truth, truth_to_json(chain.truth) + "\n");
      if (!gen_tags.empty()) write_text(gen_tags, tags_file_contents(chain.truth));
      if (!gen_rates.empty()) synthetic_rates(chain.truth).save_csv(gen_rates);
      std::cerr << "generated " << chain.blocks.size() << " blocks, " << chain.truth.txs.size()
                << " transactions\n";
    } else if (*scan) {
      OpenedSource src = open_source(scan_src);
      const ScanReport report = deep_scan(*src.source, 0, scan_src.end, {});
      std::cout << scan_report_json(report) << '\n';
    } else if (*build) {
      const ViewKind kind = parse_view_kind(view);
      OpenedSource src = open_source(build_src);
      auto sink = make_sink(parse_sink_kind(sink_name), build_out);
      sink->open(view_schema(kind));
      const ScanRange range{build_src.start, build_src.end};
      ViewReport report;
      switch (kind) {
        case ViewKind::Basic: report = build_basic(*src.source, range, *sink); break;
        case ViewKind::OpReturn: {
          const ProtocolTable table = protocols_path.empty()
                                          ? ProtocolTable::defaults()
                                          : ProtocolTable::load(protocols_path);
          report = build_opreturn(*src.source, range, table, *sink);
          break;
        }
        case ViewKind::Rates:
          report = build_rates(*src.source, range, load_rates(rates_path, rates_cache), *sink);
          break;
        case ViewKind::Fees:
          if (build_src.start.value_or(0) != 0) {
            throw Error(Errc::Precondition, "the fees view needs a deep scan from height 0");
          }
          report =
              build_fees(*src.source, build_src.end, load_rates(rates_path, rates_cache), *sink);
          break;
        case ViewKind::Tags: {
          if (tags_path.empty()) throw CLI::ValidationError("--tags", "required for tags view");
          Warnings tag_warnings;
          const TagMap tags = load_tags(tags_path, &tag_warnings);
          report = build_tags(*src.source, range, tags, src.network, *sink);
          report.warnings.insert(report.warnings.begin(), tag_warnings.begin(),
                                 tag_warnings.end());
          break;
        }
      }
      sink->close();
      std::cout << view_report_json(report) << '\n';
    } else if (*analyze) {
      const OutputFormat fmt = parse_output_format(format);
      ResultTable table;
      if (analysis == "avg-io") {
        table = to_table(avg_io_by_date(read_view<BasicRecord>(in_path)));
      } else if (analysis == "protocols") {
        table = to_table(protocol_counts(read_view<OpReturnRecord>(in_path), min_count));
      } else if (analysis == "rate-buckets") {
        const BucketResult result =
            avg_output_by_rate_bucket(read_view<RatesRecord>(in_path), bucket_width, n_buckets);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w.message << '\n';
        table = to_table(result);
      } else if (analysis == "whales") {
        const auto records = read_view<FeesRecord>(in_path);
        std::unordered_set<std::string> coinbase;
        if (exclude_coinbase) coinbase = coinbase_txids(records);
        const WhaleResult result =
            whale_transactions(records, exclude_coinbase ? &coinbase : nullptr);
        std::cerr << "n=" << result.n << " mean_usd=" << render_usd(result.mean_usd, 8)
                  << " sigma_usd=" << render_usd(result.sigma_usd, 8)
                  << " threshold_usd=" << render_usd(result.threshold_usd, 8)
                  << " whales=" << result.whales.size() << '\n';
        table = to_table(result);
      } else {
        table = to_table(daily_tx_to_tag_prefix(read_view<TagsRecord>(in_path), prefix));
      }
      write_text(analyze_out, table.render(fmt));
    } else if (*bench) {
      GenSpec bspec;
      bspec.seed = bench_seed;
      bspec.n_blocks = bench_blocks;
      const GeneratedChain chain = generate(bspec);
      std::cout << bench_table(run_bench(chain, bench_dir));
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
