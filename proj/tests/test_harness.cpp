#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "a2a/error.hpp"
#include "a2a/harness.hpp"
#include "support.hpp"

using namespace a2a;
using namespace a2a::harness;

namespace fs = std::filesystem;

namespace {

SweepConfig desk_config() {
  SweepConfig c;
  c.nodes = {1, 2, 3};
  c.ppns = {4};
  c.block_bytes = {1, 8, 64};
  c.group_sizes = {0, 2};
  return c;
}

std::string sweep_csv(const SweepConfig& c) {
  const auto points = expand(c, nullptr);
  std::vector<CsvRow> rows;
  for (const auto& r : run_points(points, c.options, c.jobs)) rows.push_back(to_row(r));
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

struct Cli {
  int status = -1;
  std::string out;
};

Cli cli(const std::string& args) {
  Cli result;
  const std::string cmd = std::string(A2A_SIM_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return result;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("a2a_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Csv, HeaderMatchesSchema) {
  EXPECT_STREQ(kCsvHeader,
               "algorithm,impl,n_nodes,ppn,group_size,block_bytes,total_bytes_per_rank,"
               "steps,msgs_l0,msgs_l1,msgs_l2,bytes_l0,bytes_l1,bytes_l2,"
               "predicted_total_s,predicted_l2_s,payload_checked");
}

TEST(Csv, EmptyAlgorithmListGivesHeaderOnly) {
  auto c = desk_config();
  c.algorithms.clear();
  EXPECT_EQ(sweep_csv(c), std::string(kCsvHeader) + "\n");
}

TEST(Csv, RoundTrip) {
  const auto text = sweep_csv(desk_config());
  std::istringstream in(text);
  const auto rows = read_csv(in);
  std::ostringstream again;
  write_csv(again, rows);
  EXPECT_EQ(again.str(), text);
}

TEST(Csv, RejectsMalformed) {
  std::istringstream bad_header("algorithm,impl\n");
  EXPECT_THROW(read_csv(bad_header), ConfigError);
  std::istringstream short_row(std::string(kCsvHeader) + "\ndirect,pairwise,1\n");
  EXPECT_THROW(read_csv(short_row), ConfigError);
}

TEST(Sweep, DeterministicAcrossRunsAndJobs) {
  auto c = desk_config();
  const auto first = sweep_csv(c);
  EXPECT_EQ(sweep_csv(c), first);
  c.jobs = 3;
  EXPECT_EQ(sweep_csv(c), first);
}

TEST(Sweep, RowOrderAndGroupSkipping) {
  SweepConfig c;
  c.nodes = {2, 1};
  c.ppns = {6};
  c.block_bytes = {4, 1};
  c.group_sizes = {0, 4, 3};
  std::vector<std::string> warnings;
  const auto points = expand(c, [&](const std::string& w) { warnings.push_back(w); });
  // group 4 does not divide 6 for each of the three aggregating algorithms
  EXPECT_EQ(warnings.size(), 3u * 2u * 2u);
  // per (nodes, bytes): direct x2, bruck x1, three aggregating algs x2 impls x2 groups
  EXPECT_EQ(points.size(), 2u * 2u * (2 + 1 + 12));
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& a = points[i - 1];
    const auto& b = points[i];
    EXPECT_LT(std::tuple(a.algorithm, a.impl, a.n_nodes, a.ppn, a.group_size, a.block_bytes),
              std::tuple(b.algorithm, b.impl, b.n_nodes, b.ppn, b.group_size, b.block_bytes));
  }
}

TEST(Sweep, DefaultDeskGrid) {
  SweepConfig c;
  c.ppns = {8};
  const auto points = expand(c, nullptr);
  // direct x2, bruck, and three aggregating algorithms x2 impls x {8, 4}
  EXPECT_EQ(points.size(), 5u * 6u * (2 + 1 + 3 * 2 * 2));
}

TEST(Sweep, RowsMatchTraceSummary) {
  for (const auto& pt : expand(desk_config(), nullptr)) {
    Trace trace;
    const auto result = evaluate(pt, RunOptions{}, &trace);
    const auto row = to_row(result);
    const auto summary = summarize(trace);
    ASSERT_EQ(row.msgs, summary.messages) << pt.label();
    ASSERT_EQ(row.bytes, summary.bytes) << pt.label();
    ASSERT_EQ(row.steps, trace.message_steps());
    ASSERT_EQ(row.total_bytes_per_rank,
              static_cast<std::uint64_t>(pt.n_nodes * pt.ppn) * pt.block_bytes);
    ASSERT_TRUE(row.payload_checked);
  }
}

TEST(Sweep, CapacityGuard) {
  Point pt{AlgorithmKind::node_aware, ExchangeImpl::pairwise, 2, 4, 2, 16};
  RunOptions roomy;
  RunOptions tight;
  tight.memory_budget = 8 * 8 * 16 - 1;
  const auto full = evaluate(pt, roomy);
  const auto lean = evaluate(pt, tight);
  EXPECT_TRUE(full.payload_checked);
  EXPECT_FALSE(lean.payload_checked);
  auto a = to_row(full);
  auto b = to_row(lean);
  EXPECT_EQ(a.msgs, b.msgs);
  EXPECT_EQ(a.bytes, b.bytes);
  EXPECT_EQ(a.predicted_total_s, b.predicted_total_s);
  b.payload_checked = true;
  EXPECT_EQ(a, b);

  RunOptions forced;
  forced.mode = PayloadMode::trace_only;
  EXPECT_FALSE(evaluate(pt, forced).payload_checked);
  forced.mode = PayloadMode::checked;
  forced.memory_budget = 0;
  EXPECT_TRUE(evaluate(pt, forced).payload_checked);
}

TEST(Sweep, PaperShapeRow) {
  Point pt{AlgorithmKind::node_aware, ExchangeImpl::nonblocking, 32, 112, 112, 4096};
  const auto row = to_row(evaluate(pt, RunOptions{}));
  EXPECT_EQ(row.total_bytes_per_rank, 14680064u);
  EXPECT_EQ(row.msgs[2], 111104u);
  EXPECT_FALSE(row.payload_checked);
}

TEST(Sweep, CorrectnessFailurePropagates) {
  Point pt{AlgorithmKind::hierarchical, ExchangeImpl::pairwise, 2, 4, 2, 2};
  RunOptions opt;
  opt.corrupt_repack = 0;
  EXPECT_THROW(evaluate(pt, opt), CorrectnessError);
  EXPECT_THROW(run_points({pt}, opt, 2), CorrectnessError);
}

TEST(Plots, ViewsAndDeterminism) {
  const auto text = sweep_csv(desk_config());
  std::istringstream in(text);
  const auto rows = read_csv(in);
  const auto plots = make_plots(rows, "desk");
  ASSERT_EQ(plots.size(), 3u);
  EXPECT_EQ(plots[0].name, "desk_bytes_n3.svg");
  EXPECT_EQ(plots[1].name, "desk_nodes_s1.svg");
  EXPECT_EQ(plots[2].name, "desk_nodes_s64.svg");
  for (const auto& p : plots) {
    EXPECT_EQ(p.svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0), 0u);
    EXPECT_NE(p.svg.find("predicted time (s)"), std::string::npos);
    EXPECT_NE(p.svg.find("stroke-dasharray"), std::string::npos);
    EXPECT_NE(p.svg.find("multileader-node-aware nonblocking g=2"), std::string::npos);
    EXPECT_NE(p.svg.find("</svg>"), std::string::npos);
  }
  const auto again = make_plots(rows, "desk");
  for (std::size_t i = 0; i < plots.size(); ++i) EXPECT_EQ(again[i].svg, plots[i].svg);
  EXPECT_TRUE(make_plots({}, "x").empty());
}

TEST(Validate, DefaultGridPasses) {
  ValidateConfig c;
  const auto report = validate(c);
  EXPECT_FALSE(report.failure.has_value()) << report.failure->message;
  EXPECT_EQ(report.cases, validation_grid(c).size() + 100);
}

TEST(Validate, TrivialGrid) {
  ValidateConfig c;
  c.max_nodes = 1;
  c.max_ppn = 1;
  c.random_cases = 0;
  const auto report = validate(c);
  EXPECT_FALSE(report.failure.has_value());
  EXPECT_GT(report.cases, 0u);
}

TEST(Validate, BruckRotationMutationIsLocated) {
  ValidateConfig c;
  c.algorithms = {AlgorithmKind::bruck};
  c.corrupt_repack = 0;
  const auto report = validate(c);
  ASSERT_TRUE(report.failure.has_value());
  EXPECT_EQ(report.failure->point.algorithm, AlgorithmKind::bruck);
  EXPECT_TRUE(report.failure->rank.has_value());
  EXPECT_TRUE(report.failure->block.has_value());
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, RunBruckSteps) {
  const auto r = cli("run --alg bruck --nodes 2 --ppn 4 --bytes 8");
  ASSERT_EQ(r.status, 0);
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], kCsvHeader);
  EXPECT_EQ(out[1].rfind("bruck,none,2,4,4,8,64,3,", 0), 0u) << out[1];
}

TEST(Cli, RunNodeAwarePaperScale) {
  const auto r = cli("run --alg node-aware --nodes 32 --ppn 112 --bytes 4096");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  const auto rows = read_csv(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].msgs[2], 111104u);
  EXPECT_EQ(rows[0].total_bytes_per_rank, 14680064u);
}

TEST(Cli, RunSingleRank) {
  const auto r = cli("run --alg direct --nodes 1 --ppn 1 --bytes 4");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  const auto rows = read_csv(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].msgs, (std::array<std::uint64_t, 3>{0, 0, 0}));
  EXPECT_EQ(rows[0].steps, 0u);
}

TEST(Cli, RunBreakdownAndTraceDump) {
  const auto dir = scratch_dir("cli_run");
  const auto trace = dir / "trace.csv";
  const auto r = cli("run --alg hierarchical --nodes 2 --ppn 4 --group-size 2 --bytes 2 "
                     "--breakdown --trace-dump " + trace.string());
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("leader-alltoall"), std::string::npos);
  const auto dumped = lines(slurp(trace));
  ASSERT_FALSE(dumped.empty());
  EXPECT_EQ(dumped[0], "phase,step,src,dst,bytes,level");
  EXPECT_NE(slurp(trace).find("gather,0,1,0,16,L0"), std::string::npos);
}

TEST(Cli, ProcsPerLeaderAlias) {
  const auto a = cli("run --alg multileader-node-aware --nodes 2 --ppn 4 --procs-per-leader 2 --bytes 2");
  const auto b = cli("run --alg multileader-node-aware --nodes 2 --ppn 4 --group-size 2 --bytes 2");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("run --alg nope --nodes 2 --ppn 4").status, 2);
  EXPECT_EQ(cli("run --alg direct --nodes 2 --ppn 4 --group-size 3").status, 2);
  EXPECT_EQ(cli("run --alg direct --seed-check --trace-only").status, 2);
  EXPECT_EQ(cli("run --alg node-aware --nodes 2 --ppn 4 --group-size 3").status, 2);
  EXPECT_EQ(cli("run --alg direct --params /nonexistent").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("run --alg node-aware --nodes 2 --ppn 4 --corrupt-repack 0").status, 1);
  EXPECT_EQ(cli("validate --max-nodes 2 --max-ppn 4 --random-cases 5").status, 0);
  const auto bad = cli("validate --alg bruck --corrupt-repack 0");
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.out.find("first mismatch: rank"), std::string::npos);
}

TEST(Cli, SweepWritesCsvAndPlots) {
  const auto dir = scratch_dir("cli_sweep");
  const auto csv = dir / "grid.csv";
  const std::string args = "sweep --nodes 1,2 --ppn 4 --bytes 4,16 --group-sizes 0,2 --plot --out " +
                           csv.string();
  ASSERT_EQ(cli(args).status, 0);
  const auto first = slurp(csv);
  const auto svg = slurp(dir / "grid_bytes_n2.svg");
  EXPECT_FALSE(svg.empty());
  ASSERT_EQ(cli(args + " --jobs 2").status, 0);
  EXPECT_EQ(slurp(csv), first);
  EXPECT_EQ(slurp(dir / "grid_bytes_n2.svg"), svg);

  const auto replot = dir / "replot";
  fs::create_directories(replot);
  ASSERT_EQ(cli("plot --csv " + csv.string() + " --out " + replot.string()).status, 0);
  EXPECT_EQ(slurp(replot / "grid_bytes_n2.svg"), svg);

  EXPECT_EQ(cli("sweep --alg '' --out -").out, std::string(kCsvHeader) + "\n");
  EXPECT_EQ(cli("sweep --nodes 1 --ppn 2 --out /nonexistent/dir/x.csv").status, 2);
}
