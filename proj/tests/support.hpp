#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "a2a/algorithms.hpp"
#include "a2a/trace.hpp"
#include "a2a/vcomm.hpp"

namespace a2a::testing {

inline int ceil_log2(std::uint64_t p) {
  return p <= 1 ? 0 : static_cast<int>(std::bit_width(p - 1));
}

/// Divisors of n in ascending order.
inline std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int d = 1; d <= n; ++d) {
    if (n % d == 0) out.push_back(d);
  }
  return out;
}

/// Streaming statistics for traces too large to record.
class StatsSink final : public TraceSink {
 public:
  struct PhaseStats {
    PhaseTag tag = PhaseTag::repack;
    std::uint64_t steps = 0;
    LevelSummary summary;
    // bytes -> count, per level
    std::array<std::map<std::uint64_t, std::uint64_t>, kLevelCount> sizes;
    // largest number of bytes one rank sent within a single step
    std::uint64_t max_step_bytes_per_rank = 0;
    std::uint64_t min_step_bytes_per_rank = UINT64_MAX;
  };

  explicit StatsSink(int n_ranks)
      : l2_sent_(static_cast<std::size_t>(n_ranks), 0),
        step_bytes_(static_cast<std::size_t>(n_ranks), 0) {}

  void begin_phase(const PhaseRecord& header) override {
    phases.push_back({});
    phases.back().tag = header.tag;
    phases.back().steps = header.step_count;
  }
  void local_copy(Rank, std::uint64_t) override {}
  void message(const TraceEvent& e) override {
    auto& ph = phases.back();
    ph.summary.add(e);
    ++ph.sizes[static_cast<std::size_t>(e.level)][e.bytes];
    if (e.level == Level::l2) ++l2_sent_[static_cast<std::size_t>(e.src)];
    auto& b = step_bytes_[static_cast<std::size_t>(e.src)];
    if (b == 0) touched_.push_back(e.src);
    b += e.bytes;
  }
  void end_step(std::uint64_t) override {
    auto& ph = phases.back();
    for (Rank r : touched_) {
      auto& b = step_bytes_[static_cast<std::size_t>(r)];
      ph.max_step_bytes_per_rank = std::max(ph.max_step_bytes_per_rank, b);
      ph.min_step_bytes_per_rank = std::min(ph.min_step_bytes_per_rank, b);
      b = 0;
    }
    if (touched_.size() != step_bytes_.size()) ph.min_step_bytes_per_rank = 0;
    touched_.clear();
  }
  void end_phase() override {}

  LevelSummary total() const {
    LevelSummary s;
    for (const auto& ph : phases) {
      for (std::size_t l = 0; l < kLevelCount; ++l) {
        s.messages[l] += ph.summary.messages[l];
        s.bytes[l] += ph.summary.bytes[l];
      }
    }
    return s;
  }
  std::uint64_t message_steps() const {
    std::uint64_t n = 0;
    for (const auto& ph : phases) n += ph.steps;
    return n;
  }
  /// bytes -> count of L2 messages over the whole run.
  std::map<std::uint64_t, std::uint64_t> l2_sizes() const {
    std::map<std::uint64_t, std::uint64_t> out;
    for (const auto& ph : phases) {
      for (auto [b, c] : ph.sizes[2]) out[b] += c;
    }
    return out;
  }
  const std::vector<std::uint64_t>& l2_sent_per_rank() const { return l2_sent_; }

  std::vector<PhaseStats> phases;

 private:
  std::vector<std::uint64_t> l2_sent_;
  std::vector<std::uint64_t> step_bytes_;
  std::vector<Rank> touched_;
};

inline StatsSink trace_stats(const Topology& topo, const Schedule& schedule) {
  StatsSink sink(topo.size());
  trace_schedule(topo, schedule, sink);
  return sink;
}

/// Checks one pairwise exchange phase: `m - 1` steps, and in every step each
/// participant sends exactly one message and receives exactly one, pairs
/// disjoint. Returns an empty string on success, otherwise a description.
inline std::string check_pairwise_phase(const Trace& trace, std::size_t phase,
                                        const std::set<Rank>& participants,
                                        std::uint64_t m) {
  const auto& rec = trace.phases[phase];
  if (rec.step_count != m - 1) {
    return "phase has " + std::to_string(rec.step_count) + " steps, expected " +
           std::to_string(m - 1);
  }
  std::map<std::uint64_t, std::vector<TraceEvent>> by_step;
  for (const auto& e : trace.events_of(phase)) by_step[e.step].push_back(e);
  // Over the whole phase no ordered pair talks twice: the steps are disjoint.
  std::set<std::pair<Rank, Rank>> used;
  for (std::uint64_t k = 0; k < rec.step_count; ++k) {
    const auto& events = by_step[rec.first_step + k];
    std::set<Rank> senders, receivers;
    for (const auto& e : events) {
      if (!participants.contains(e.src) || !participants.contains(e.dst)) {
        return "message outside the communicator";
      }
      if (!senders.insert(e.src).second) return "rank sends twice in a step";
      if (!receivers.insert(e.dst).second) return "rank receives twice in a step";
      if (!used.emplace(e.src, e.dst).second) return "pair repeats across steps";
    }
    if (senders != participants || receivers != participants) {
      return "step " + std::to_string(k) + " does not involve every participant";
    }
  }
  return {};
}

}  // namespace a2a::testing
