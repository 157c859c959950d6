#include "a2a/trace.hpp"

#include <ostream>

#include <fmt/format.h>

#include "a2a/error.hpp"

namespace a2a {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::l0: return "L0";
    case Level::l1: return "L1";
    case Level::l2: return "L2";
  }
  return "?";
}

Level classify_level(const Topology& topo, Rank src, Rank dst) {
  if (src < 0 || src >= topo.size() || dst < 0 || dst >= topo.size()) {
    throw ConfigError(fmt::format("ranks ({}, {}) out of range", src, dst));
  }
  if (src == dst) {
    throw ConfigError(fmt::format(
        "rank {} messaging itself has no locality level", src));
  }
  if (topo.node_of(src) != topo.node_of(dst)) return Level::l2;
  if (topo.region_of(src) != topo.region_of(dst)) return Level::l1;
  return Level::l0;
}

std::uint64_t Trace::message_steps() const {
  std::uint64_t steps = 0;
  for (const auto& ph : phases) steps += ph.step_count;
  return steps;
}

void TraceRecorder::begin_phase(const PhaseRecord& header) {
  PhaseRecord rec = header;
  rec.first_event = trace_.events.size();
  rec.event_count = 0;
  rec.copies.clear();
  trace_.phases.push_back(std::move(rec));
}

void TraceRecorder::local_copy(Rank rank, std::uint64_t bytes) {
  trace_.phases.back().copies.emplace_back(rank, bytes);
}

void TraceRecorder::message(const TraceEvent& event) {
  trace_.events.push_back(event);
}

void TraceRecorder::end_phase() {
  auto& rec = trace_.phases.back();
  rec.event_count = trace_.events.size() - rec.first_event;
}

void TeeSink::begin_phase(const PhaseRecord& header) {
  for (auto* s : sinks_) s->begin_phase(header);
}
void TeeSink::local_copy(Rank rank, std::uint64_t bytes) {
  for (auto* s : sinks_) s->local_copy(rank, bytes);
}
void TeeSink::message(const TraceEvent& event) {
  for (auto* s : sinks_) s->message(event);
}
void TeeSink::end_step(std::uint64_t step) {
  for (auto* s : sinks_) s->end_step(step);
}
void TeeSink::end_phase() {
  for (auto* s : sinks_) s->end_phase();
}

void replay(const Trace& trace, TraceSink& sink) {
  for (std::size_t i = 0; i < trace.phases.size(); ++i) {
    const auto& rec = trace.phases[i];
    sink.begin_phase(rec);
    for (const auto& [rank, bytes] : rec.copies) sink.local_copy(rank, bytes);
    auto events = trace.events_of(i);
    auto it = events.begin();
    for (std::uint64_t k = 0; k < rec.step_count; ++k) {
      const std::uint64_t step = rec.first_step + k;
      for (; it != events.end() && it->step == step; ++it) sink.message(*it);
      sink.end_step(step);
    }
    sink.end_phase();
  }
}

LevelSummary summarize(std::span<const TraceEvent> events) {
  LevelSummary s;
  for (const auto& e : events) s.add(e);
  return s;
}

LevelSummary summarize(const Trace& trace) { return summarize(trace.events); }

std::vector<MessageKey> message_sequence(const Trace& trace) {
  std::vector<MessageKey> out;
  out.reserve(trace.events.size());
  std::uint64_t next = 0;
  for (std::size_t i = 0; i < trace.phases.size(); ++i) {
    const auto events = trace.events_of(i);
    if (events.empty()) continue;
    const std::uint64_t base = trace.phases[i].first_step;
    for (const auto& e : events) {
      out.push_back({next + (e.step - base), e.src, e.dst, e.bytes});
    }
    next += trace.phases[i].step_count;
  }
  return out;
}

bool equivalent_modulo_empty_phases(const Trace& a, const Trace& b) {
  return message_sequence(a) == message_sequence(b);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "phase,step,src,dst,bytes,level\n";
  for (const auto& e : trace.events) {
    out << to_string(e.phase) << ',' << e.step << ',' << e.src << ','
        << e.dst << ',' << e.bytes << ',' << to_string(e.level) << '\n';
  }
}

}  // namespace a2a
