#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "a2a/schedule.hpp"
#include "a2a/topology.hpp"
#include "a2a/trace.hpp"

namespace a2a {

/// Hierarchical alpha-beta parameters, indexed by Level.
struct CostParams {
  std::array<double, kLevelCount> alpha{};  // seconds per message
  std::array<double, kLevelCount> beta{};   // seconds per byte
  double nic_bandwidth = 0;                 // bytes/second per node, L2 sends
  double queue_penalty = 0;                 // seconds per posted receive
  double copy_beta = 0;                     // seconds per repacked byte

  /// Illustrative desk defaults, not a calibration of any machine.
  static CostParams defaults();

  /// Every time-valued field multiplied by c, nic_bandwidth divided by c.
  CostParams scaled(double c) const;

  /// Throws ConfigError on negative values or a non-positive bandwidth.
  void validate() const;
  /// Human-readable notes for suspicious but legal settings (e.g. a cheaper
  /// inter-node than intra-node latency).
  std::vector<std::string> warnings() const;

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

/// Parses `key = value` lines. Keys: alpha.l0 alpha.l1 alpha.l2 beta.l0
/// beta.l1 beta.l2 nic_bandwidth queue_penalty copy_beta. Blank lines and
/// `#` comments are ignored; keys not given keep their default. Unknown or
/// repeated keys and malformed values throw ConfigError.
CostParams parse_params(std::istream& in);
CostParams load_params(const std::filesystem::path& path);
void write_params(std::ostream& out, const CostParams& params);

struct PhaseCost {
  PhaseTag tag = PhaseTag::repack;
  bool concurrent = false;
  std::uint64_t steps = 0;
  double seconds = 0;
  double l2_seconds = 0;
  LevelSummary traffic;
  std::uint64_t max_copy_bytes = 0;
};

struct CostReport {
  std::vector<PhaseCost> phases;
  double total_seconds = 0;
  double l2_seconds = 0;
  LevelSummary traffic;
  std::uint64_t message_steps = 0;
  /// Largest number of bytes any single rank sent over the whole run.
  std::uint64_t max_rank_bytes_sent = 0;
};

/// Streaming pricer. A step costs the slowest rank's summed alpha + bytes *
/// beta over the messages it sends (plus queue_penalty per posted receive
/// in concurrent phases), but no less than the busiest node's L2 bytes over
/// nic_bandwidth. Repack phases cost copy_beta times the largest per-rank
/// copy volume.
class CostAccumulator final : public TraceSink {
 public:
  CostAccumulator(const Topology& topo, const CostParams& params);

  void begin_phase(const PhaseRecord& header) override;
  void local_copy(Rank rank, std::uint64_t bytes) override;
  void message(const TraceEvent& event) override;
  void end_step(std::uint64_t step) override;
  void end_phase() override;

  const CostReport& report() const noexcept { return report_; }
  CostReport take() { return std::move(report_); }

 private:
  void touch(Rank rank);

  Topology topo_;
  CostParams params_;
  CostReport report_;
  PhaseCost current_;

  // Per-step state; a rank's slots are valid when its stamp matches.
  std::vector<std::uint64_t> node_l2_bytes_;
  std::vector<double> rank_time_;
  std::vector<double> rank_l2_time_;
  std::vector<std::uint32_t> recv_posts_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t step_stamp_ = 1;
  std::vector<Rank> touched_ranks_;
  std::vector<int> touched_nodes_;
  std::vector<std::uint64_t> rank_bytes_sent_;
};

/// Prices a recorded trace.
CostReport predict(const Trace& trace, const Topology& topo,
                   const CostParams& params);

struct BreakdownRow {
  PhaseTag tag = PhaseTag::repack;
  double seconds = 0;
  std::array<std::uint64_t, kLevelCount> bytes{};
};

/// One row per phase in schedule order.
std::vector<BreakdownRow> breakdown(const CostReport& report);
void write_breakdown(std::ostream& out, const std::vector<BreakdownRow>& rows);

}  // namespace a2a
