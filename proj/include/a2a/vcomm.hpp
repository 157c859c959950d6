#pragma once

#include <vector>

#include "a2a/buffer.hpp"
#include "a2a/schedule.hpp"
#include "a2a/topology.hpp"
#include "a2a/trace.hpp"

namespace a2a {

struct RunResult {
  std::vector<BlockBuffer> outputs;
  Trace trace;
};

/// Executes `schedule` over every simulated rank, moving payload bytes.
///
/// Phases run in order and steps within a phase run in order. All messages
/// of a step are logically concurrent: every send is read before any
/// receive is written. Every posted send must meet a receive of the same
/// size in the same step; otherwise a ScheduleError names the phase, step
/// and ranks involved. A schedule without phases returns the inputs.
RunResult run_schedule(const Topology& topo, const Schedule& schedule,
                       std::vector<BlockBuffer> inputs);

/// As above, streaming the trace into `sink` instead of recording it.
std::vector<BlockBuffer> run_schedule(const Topology& topo,
                                      const Schedule& schedule,
                                      std::vector<BlockBuffer> inputs,
                                      TraceSink& sink);

/// Trace-only execution: posts are matched and every message is reported
/// to `sink`, but no payload is allocated or copied.
void trace_schedule(const Topology& topo, const Schedule& schedule,
                    TraceSink& sink);

}  // namespace a2a
