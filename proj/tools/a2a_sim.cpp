// Command-line driver: validate, run, sweep, plot.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "a2a/error.hpp"
#include "a2a/harness.hpp"

namespace {

using namespace a2a;
using namespace a2a::harness;

constexpr int kExitCorrectness = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parse_numbers(const std::string& text, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad value '{}' in {}", item, what));
    }
  }
  return out;
}

std::vector<AlgorithmKind> parse_algorithms(const std::string& text) {
  if (text == "all") return {std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};
  std::vector<AlgorithmKind> out;
  for (const auto& name : split_list(text)) {
    auto kind = parse_algorithm(name);
    if (!kind) throw ConfigError("unknown algorithm: " + name);
    out.push_back(*kind);
  }
  return out;
}

ExchangeImpl parse_impl(const std::string& text) {
  auto impl = parse_exchange_impl(text);
  if (!impl) throw ConfigError("unknown impl: " + text);
  return *impl;
}

struct ModeFlags {
  bool seed_check = false;
  bool trace_only = false;
  std::uint64_t memory_budget = RunOptions{}.memory_budget;
  std::string params_path;

  void add_to(CLI::App* cmd) {
    auto* a = cmd->add_flag("--seed-check", seed_check,
                            "always move and verify payload bytes");
    auto* b = cmd->add_flag("--trace-only", trace_only,
                            "count and price messages without payloads");
    a->excludes(b);
    cmd->add_option("--memory-budget", memory_budget,
                    "largest p*p*s run with payloads by default (bytes)");
    cmd->add_option("--params", params_path, "cost parameter file");
  }

  RunOptions options() const {
    RunOptions opt;
    if (!params_path.empty()) opt.params = load_params(params_path);
    for (const auto& w : opt.params.warnings()) fmt::print(stderr, "warning: {}\n", w);
    opt.memory_budget = memory_budget;
    if (seed_check) opt.mode = PayloadMode::checked;
    if (trace_only) opt.mode = PayloadMode::trace_only;
    return opt;
  }
};

// ---------------------------------------------------------------------------

struct ValidateArgs {
  ValidateConfig config;
  std::string algorithms = "all";
  std::optional<std::size_t> corrupt;
};

int cmd_validate(ValidateArgs& args) {
  args.config.algorithms = parse_algorithms(args.algorithms);
  args.config.corrupt_repack = args.corrupt;
  const auto report = validate(args.config);
  if (!report.failure) {
    fmt::print("validate: {} cases passed\n", report.cases);
    return 0;
  }
  const auto& f = *report.failure;
  fmt::print("validate: FAIL after {} cases\n", report.cases);
  fmt::print("  config: {}\n", f.point.label());
  if (f.rank) {
    fmt::print("  first mismatch: rank {} block {} byte {}\n", *f.rank, *f.block,
               *f.byte);
  }
  fmt::print("  {}\n", f.message);
  return kExitCorrectness;
}

struct RunArgs {
  std::string algorithm;
  std::string impl = "pairwise";
  int nodes = 1;
  int ppn = 1;
  std::optional<int> group_size;
  std::uint64_t bytes = 4;
  ModeFlags mode;
  bool breakdown = false;
  std::string trace_dump;
  std::optional<std::size_t> corrupt;
};

int cmd_run(const RunArgs& args) {
  Point point;
  auto kind = parse_algorithm(args.algorithm);
  if (!kind) throw ConfigError("unknown algorithm: " + args.algorithm);
  point.algorithm = *kind;
  point.impl = parse_impl(args.impl);
  point.n_nodes = args.nodes;
  point.ppn = args.ppn;
  point.group_size = args.group_size.value_or(args.ppn);
  point.block_bytes = args.bytes;
  if (args.group_size && !uses_group_size(point.algorithm) && *args.group_size != args.ppn) {
    throw ConfigError(fmt::format("--group-size does not apply to {}",
                                  args.algorithm));
  }
  if (point.block_bytes == 0) throw ConfigError("--bytes must be >= 1");

  RunOptions options = args.mode.options();
  options.corrupt_repack = args.corrupt;
  Trace trace;
  const auto result =
      evaluate(point, options, args.trace_dump.empty() ? nullptr : &trace);

  write_csv(std::cout, {to_row(result)});
  if (args.breakdown) {
    std::cout << '\n';
    write_breakdown(std::cout, breakdown(result.report));
  }
  if (!args.trace_dump.empty()) {
    std::ofstream out(args.trace_dump);
    write_trace_csv(out, trace);
    if (!out) throw ConfigError("cannot write trace to " + args.trace_dump);
  }
  return 0;
}

struct SweepArgs {
  std::string nodes = "2,4,8,16,32";
  std::string ppns = "112";
  std::string bytes = "4,16,64,256,1024,4096";
  std::string algorithms = "all";
  std::string impls = "pairwise,nonblocking";
  std::string groups = "0,4,8,16";
  ModeFlags mode;
  std::string out = "-";
  bool plot = false;
  int jobs = 1;
};

void emit_plots(const std::vector<CsvRow>& rows, const std::string& out) {
  std::filesystem::path dir = ".";
  std::string stem = "sweep";
  if (out != "-") {
    const std::filesystem::path p(out);
    dir = p.has_parent_path() ? p.parent_path() : ".";
    stem = p.stem().string();
  }
  const auto plots = make_plots(rows, stem);
  write_plots(plots, dir);
  for (const auto& plot : plots) {
    fmt::print(stderr, "wrote {}\n", (dir / plot.name).string());
  }
}

int cmd_sweep(const SweepArgs& args) {
  SweepConfig config;
  config.nodes = parse_numbers<int>(args.nodes, "--nodes");
  config.ppns = parse_numbers<int>(args.ppns, "--ppn");
  config.block_bytes = parse_numbers<std::uint64_t>(args.bytes, "--bytes");
  config.algorithms = parse_algorithms(args.algorithms);
  config.impls.clear();
  for (const auto& name : split_list(args.impls)) config.impls.push_back(parse_impl(name));
  config.group_sizes = parse_numbers<int>(args.groups, "--group-sizes");
  config.options = args.mode.options();
  config.jobs = args.jobs;
  for (int n : config.nodes) {
    if (n < 1) throw ConfigError("--nodes values must be >= 1");
  }
  for (int p : config.ppns) {
    if (p < 1) throw ConfigError("--ppn values must be >= 1");
  }
  for (auto s : config.block_bytes) {
    if (s < 1) throw ConfigError("--bytes values must be >= 1");
  }

  std::ofstream file;
  if (args.out != "-") {
    file.open(args.out, std::ios::binary);
    if (!file) throw ConfigError("cannot open output " + args.out);
  }
  std::ostream& out = args.out == "-" ? std::cout : file;

  const auto points = expand(config, [](const std::string& msg) {
    fmt::print(stderr, "warning: {}\n", msg);
  });
  const auto results = run_points(points, config.options, config.jobs);
  std::vector<CsvRow> rows;
  rows.reserve(results.size());
  for (const auto& r : results) rows.push_back(to_row(r));
  write_csv(out, rows);
  out.flush();
  if (!out) throw ConfigError("failed writing " + args.out);
  if (args.plot) emit_plots(rows, args.out);
  return 0;
}

struct PlotArgs {
  std::string csv;
  std::string out_dir = ".";
  std::string stem;
};

int cmd_plot(const PlotArgs& args) {
  std::ifstream in(args.csv);
  if (!in) throw ConfigError("cannot open " + args.csv);
  const auto rows = read_csv(in);
  const std::string stem =
      args.stem.empty() ? std::filesystem::path(args.csv).stem().string() : args.stem;
  const auto plots = make_plots(rows, stem);
  write_plots(plots, args.out_dir);
  for (const auto& plot : plots) {
    fmt::print("wrote {}\n", (std::filesystem::path(args.out_dir) / plot.name).string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"All-to-all schedule simulator"};
  app.require_subcommand(1);

  ValidateArgs vargs;
  auto* validate_cmd = app.add_subcommand("validate", "check every algorithm against the oracle");
  validate_cmd->add_option("--max-nodes", vargs.config.max_nodes)->capture_default_str();
  validate_cmd->add_option("--max-ppn", vargs.config.max_ppn)->capture_default_str();
  validate_cmd->add_option("--max-bytes", vargs.config.max_bytes)->capture_default_str();
  validate_cmd->add_option("--random-cases", vargs.config.random_cases)->capture_default_str();
  validate_cmd->add_option("--seed", vargs.config.seed)->capture_default_str();
  validate_cmd->add_option("--alg", vargs.algorithms, "comma-separated list or 'all'")
      ->capture_default_str();
  validate_cmd->add_option("--corrupt-repack", vargs.corrupt,
                           "fault injection: scramble the k-th repack (0-based)");

  RunArgs rargs;
  auto* run_cmd = app.add_subcommand("run", "simulate one configuration");
  run_cmd->add_option("--alg", rargs.algorithm)->required();
  run_cmd->add_option("--impl", rargs.impl, "pairwise or nonblocking")->capture_default_str();
  run_cmd->add_option("--nodes", rargs.nodes)->capture_default_str();
  run_cmd->add_option("--ppn", rargs.ppn)->capture_default_str();
  run_cmd->add_option("--group-size,--procs-per-leader", rargs.group_size,
                      "ranks per aggregation group (default ppn)");
  run_cmd->add_option("--bytes", rargs.bytes, "bytes per block")->capture_default_str();
  rargs.mode.add_to(run_cmd);
  run_cmd->add_flag("--breakdown", rargs.breakdown, "print the per-phase table");
  run_cmd->add_option("--trace-dump", rargs.trace_dump, "write the message trace as CSV");
  run_cmd->add_option("--corrupt-repack", rargs.corrupt,
                      "fault injection: scramble the k-th repack (0-based)");

  SweepArgs sargs;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid to CSV");
  sweep_cmd->add_option("--nodes", sargs.nodes)->capture_default_str();
  sweep_cmd->add_option("--ppn", sargs.ppns)->capture_default_str();
  sweep_cmd->add_option("--bytes", sargs.bytes)->capture_default_str();
  sweep_cmd->add_option("--alg", sargs.algorithms, "comma-separated list or 'all'")
      ->capture_default_str();
  sweep_cmd->add_option("--impl", sargs.impls)->capture_default_str();
  sweep_cmd->add_option("--group-sizes,--procs-per-leader", sargs.groups,
                        "0 means ppn")
      ->capture_default_str();
  sargs.mode.add_to(sweep_cmd);
  sweep_cmd->add_option("--out", sargs.out, "CSV path, '-' for stdout")->capture_default_str();
  sweep_cmd->add_flag("--plot", sargs.plot, "also write SVG plots next to --out");
  sweep_cmd->add_option("--jobs", sargs.jobs)->capture_default_str();

  PlotArgs pargs;
  auto* plot_cmd = app.add_subcommand("plot", "redraw SVG plots from a sweep CSV");
  plot_cmd->add_option("--csv", pargs.csv)->required();
  plot_cmd->add_option("--out", pargs.out_dir, "output directory")->capture_default_str();
  plot_cmd->add_option("--stem", pargs.stem, "file name prefix (default: CSV stem)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(vargs);
    if (*run_cmd) return cmd_run(rargs);
    if (*sweep_cmd) return cmd_sweep(sargs);
    if (*plot_cmd) return cmd_plot(pargs);
  } catch (const CorrectnessError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitCorrectness;
  } catch (const ScheduleError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitCorrectness;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
