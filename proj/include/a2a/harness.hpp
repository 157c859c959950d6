#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "a2a/algorithms.hpp"
#include "a2a/costmodel.hpp"
#include "a2a/trace.hpp"

namespace a2a::harness {

/// One configuration of the experiment grid.
struct Point {
  AlgorithmKind algorithm = AlgorithmKind::direct;
  ExchangeImpl impl = ExchangeImpl::pairwise;
  int n_nodes = 1;
  int ppn = 1;
  int group_size = 1;
  std::uint64_t block_bytes = 1;

  Topology topology() const { return Topology(n_nodes, ppn, group_size); }
  std::string label() const;
};

enum class PayloadMode {
  automatic,   // payload-checked when p*p*s fits the memory budget
  checked,     // always move and verify payload bytes
  trace_only,  // never materialise payloads
};

struct RunOptions {
  CostParams params = CostParams::defaults();
  PayloadMode mode = PayloadMode::automatic;
  /// Largest p*p*s (aggregate payload bytes) run with payloads in automatic
  /// mode.
  std::uint64_t memory_budget = std::uint64_t{32} << 20;
  /// Corrupt this repack (0-based among repacks) when the schedule has it.
  std::optional<std::size_t> corrupt_repack;
};

struct PointResult {
  Point point;
  CostReport report;
  bool payload_checked = false;
};

/// Builds and executes one point. Throws CorrectnessError if a payload run
/// disagrees with the reference transpose. When `trace` is non-null the
/// full trace is recorded into it.
PointResult evaluate(const Point& point, const RunOptions& options,
                     Trace* trace = nullptr);

// ---------------------------------------------------------------------------
// CSV

/// One row of the results table, in header order.
struct CsvRow {
  std::string algorithm;
  std::string impl;
  int n_nodes = 0;
  int ppn = 0;
  int group_size = 0;
  std::uint64_t block_bytes = 0;
  std::uint64_t total_bytes_per_rank = 0;
  std::uint64_t steps = 0;
  std::array<std::uint64_t, kLevelCount> msgs{};
  std::array<std::uint64_t, kLevelCount> bytes{};
  double predicted_total_s = 0;
  double predicted_l2_s = 0;
  bool payload_checked = false;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

extern const char* const kCsvHeader;

CsvRow to_row(const PointResult& result);
std::string format_row(const CsvRow& row);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
/// Throws ConfigError on a wrong header or malformed line.
std::vector<CsvRow> read_csv(std::istream& in);

/// Name printed in the impl column; algorithms without an exchange
/// implementation print "none".
std::string impl_label(AlgorithmKind kind, ExchangeImpl impl);

// ---------------------------------------------------------------------------
// Sweep

struct SweepConfig {
  std::vector<int> nodes{2, 4, 8, 16, 32};
  std::vector<int> ppns{112};
  std::vector<std::uint64_t> block_bytes{4, 16, 64, 256, 1024, 4096};
  std::vector<AlgorithmKind> algorithms{std::begin(kAllAlgorithms),
                                        std::end(kAllAlgorithms)};
  std::vector<ExchangeImpl> impls{ExchangeImpl::pairwise,
                                  ExchangeImpl::nonblocking};
  /// Group sizes for the aggregating algorithms. 0 stands for "ppn".
  std::vector<int> group_sizes{0, 4, 8, 16};
  RunOptions options;
  int jobs = 1;
};

/// Grid points in CSV row order. Group sizes that do not divide ppn are
/// dropped with a message passed to `warn`.
std::vector<Point> expand(const SweepConfig& config,
                          const std::function<void(const std::string&)>& warn);

/// Evaluates every point, in parallel when config.jobs > 1. Results are in
/// `points` order regardless of scheduling.
std::vector<PointResult> run_points(const std::vector<Point>& points,
                                    const RunOptions& options, int jobs);

// ---------------------------------------------------------------------------
// Plots

struct PlotFile {
  std::string name;  // file name, no directory
  std::string svg;
};

/// Predicted time vs bytes at the largest node count, and vs nodes at the
/// smallest and largest block size. One polyline per algorithm/impl/group
/// (and ppn when several are present), log-log axes.
std::vector<PlotFile> make_plots(const std::vector<CsvRow>& rows,
                                 const std::string& stem);
void write_plots(const std::vector<PlotFile>& plots,
                 const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Validate

struct ValidateConfig {
  int max_nodes = 4;
  int max_ppn = 8;
  std::uint64_t max_bytes = 64;
  int random_cases = 100;
  std::uint64_t seed = 0x5eed;
  std::vector<AlgorithmKind> algorithms{std::begin(kAllAlgorithms),
                                        std::end(kAllAlgorithms)};
  std::optional<std::size_t> corrupt_repack;
};

struct ValidateFailure {
  Point point;
  std::string message;
  std::optional<Rank> rank;
  std::optional<std::size_t> block;
  std::optional<std::size_t> byte;
};

struct ValidateReport {
  std::size_t cases = 0;
  std::optional<ValidateFailure> failure;
};

/// Grid points checked by validate: nodes 1..max_nodes, ppn and block size
/// over powers of two / four up to their bounds, every group size dividing
/// ppn, every algorithm and impl.
std::vector<Point> validation_grid(const ValidateConfig& config);

/// Runs the grid plus `random_cases` seeded random configurations and stops
/// at the first failure.
ValidateReport validate(const ValidateConfig& config);

}  // namespace a2a::harness
