#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "a2a/schedule.hpp"
#include "a2a/topology.hpp"

namespace a2a {

/// Locality of a message: same aggregation group, same node, or network.
enum class Level : std::uint8_t { l0 = 0, l1 = 1, l2 = 2 };

inline constexpr std::size_t kLevelCount = 3;
inline constexpr std::array<Level, kLevelCount> kLevels{Level::l0, Level::l1,
                                                        Level::l2};

std::string_view to_string(Level level);

/// Throws ConfigError when src == dst or either rank is out of range.
Level classify_level(const Topology& topo, Rank src, Rank dst);

/// One simulated message.
struct TraceEvent {
  PhaseTag phase = PhaseTag::direct;
  std::uint64_t step = 0;  // global, monotone across phases
  Rank src = 0;
  Rank dst = 0;
  std::uint64_t bytes = 0;
  Level level = Level::l0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Phase header plus the slice of events and local copies it produced.
struct PhaseRecord {
  PhaseTag tag = PhaseTag::repack;
  bool concurrent = false;
  std::uint64_t first_step = 0;
  std::uint64_t step_count = 0;
  std::size_t first_event = 0;
  std::size_t event_count = 0;
  /// (rank, bytes) for every rank that copied bytes locally.
  std::vector<std::pair<Rank, std::uint64_t>> copies;
};

struct Trace {
  std::vector<PhaseRecord> phases;
  std::vector<TraceEvent> events;  // ordered by step, then src, then dst

  std::span<const TraceEvent> events_of(std::size_t phase) const {
    const auto& rec = phases.at(phase);
    return std::span<const TraceEvent>(events).subspan(rec.first_event,
                                                       rec.event_count);
  }
  std::uint64_t message_steps() const;
};

/// Receives the execution of a schedule as it happens. The engine calls
/// begin_phase, then local_copy for each copying rank, then for every step
/// its messages in (src, dst) order followed by end_step, then end_phase.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void begin_phase(const PhaseRecord& header) = 0;
  virtual void local_copy(Rank rank, std::uint64_t bytes) = 0;
  virtual void message(const TraceEvent& event) = 0;
  virtual void end_step(std::uint64_t step) = 0;
  virtual void end_phase() = 0;
};

/// Materialises a Trace.
class TraceRecorder final : public TraceSink {
 public:
  void begin_phase(const PhaseRecord& header) override;
  void local_copy(Rank rank, std::uint64_t bytes) override;
  void message(const TraceEvent& event) override;
  void end_step(std::uint64_t) override {}
  void end_phase() override;

  const Trace& trace() const noexcept { return trace_; }
  Trace take() { return std::move(trace_); }

 private:
  Trace trace_;
};

/// Forwards every callback to each sink in order.
class TeeSink final : public TraceSink {
 public:
  explicit TeeSink(std::vector<TraceSink*> sinks) : sinks_(std::move(sinks)) {}
  void begin_phase(const PhaseRecord& header) override;
  void local_copy(Rank rank, std::uint64_t bytes) override;
  void message(const TraceEvent& event) override;
  void end_step(std::uint64_t step) override;
  void end_phase() override;

 private:
  std::vector<TraceSink*> sinks_;
};

/// Feeds a recorded trace to a sink with the same callback sequence the
/// engine produced.
void replay(const Trace& trace, TraceSink& sink);

/// Per-level message counts and byte totals.
struct LevelSummary {
  std::array<std::uint64_t, kLevelCount> messages{};
  std::array<std::uint64_t, kLevelCount> bytes{};

  std::uint64_t total_messages() const {
    return messages[0] + messages[1] + messages[2];
  }
  std::uint64_t total_bytes() const { return bytes[0] + bytes[1] + bytes[2]; }
  void add(const TraceEvent& e) {
    messages[static_cast<std::size_t>(e.level)] += 1;
    bytes[static_cast<std::size_t>(e.level)] += e.bytes;
  }
  friend bool operator==(const LevelSummary&, const LevelSummary&) = default;
};

LevelSummary summarize(const Trace& trace);
LevelSummary summarize(std::span<const TraceEvent> events);

/// Message events of phases that sent anything, with steps renumbered
/// densely from zero. Phase tags and levels are dropped: levels depend on
/// the group size the trace was classified under, not on the messages.
struct MessageKey {
  std::uint64_t step = 0;
  Rank src = 0;
  Rank dst = 0;
  std::uint64_t bytes = 0;
  friend bool operator==(const MessageKey&, const MessageKey&) = default;
};
std::vector<MessageKey> message_sequence(const Trace& trace);

/// True when both traces move the same messages in the same steps once
/// phases without messages are deleted.
bool equivalent_modulo_empty_phases(const Trace& a, const Trace& b);

/// CSV with header `phase,step,src,dst,bytes,level`, one line per event.
void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace a2a
