#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "a2a/error.hpp"
#include "a2a/harness.hpp"

namespace a2a::harness {

std::string Point::label() const {
  return fmt::format("{}/{} nodes={} ppn={} group={} bytes={}",
                     to_string(algorithm), impl_label(algorithm, impl), n_nodes,
                     ppn, group_size, block_bytes);
}

PointResult evaluate(const Point& point, const RunOptions& options,
                     Trace* trace) {
  const Topology topo = point.topology();
  Schedule schedule = build_schedule(
      topo, AlgorithmSpec{point.algorithm, point.impl, point.group_size},
      point.block_bytes);
  if (options.corrupt_repack && *options.corrupt_repack < repack_count(schedule)) {
    schedule = corrupt_repack(schedule, *options.corrupt_repack);
  }

  const auto p = static_cast<std::uint64_t>(topo.size());
  const bool fits = p * p <= options.memory_budget / point.block_bytes;
  const bool with_payload =
      options.mode == PayloadMode::checked ||
      (options.mode == PayloadMode::automatic && fits);

  CostAccumulator cost(topo, options.params);
  TraceRecorder recorder;
  std::vector<TraceSink*> sinks{&cost};
  if (trace != nullptr) sinks.push_back(&recorder);
  TeeSink sink(std::move(sinks));

  if (with_payload) {
    auto inputs = seed_payload(topo, point.block_bytes);
    auto outputs = run_schedule(topo, schedule, inputs, sink);
    check_against_oracle(topo, inputs, outputs);
  } else {
    trace_schedule(topo, schedule, sink);
  }
  if (trace != nullptr) *trace = recorder.take();
  return PointResult{point, cost.take(), with_payload};
}

std::vector<Point> expand(const SweepConfig& config,
                          const std::function<void(const std::string&)>& warn) {
  std::vector<Point> points;
  for (auto alg : config.algorithms) {
    const std::vector<ExchangeImpl> impls =
        uses_exchange_impl(alg) ? config.impls
                                : std::vector<ExchangeImpl>{ExchangeImpl::pairwise};
    for (auto impl : impls) {
      for (int nodes : config.nodes) {
        for (int ppn : config.ppns) {
          std::set<int> groups;
          if (!uses_group_size(alg)) {
            groups.insert(ppn);
          } else {
            for (int g : config.group_sizes) {
              const int resolved = g == 0 ? ppn : g;
              if (resolved < 1 || ppn % resolved != 0) {
                if (warn) {
                  warn(fmt::format("skipping {} with ppn={} group_size={}: group "
                                   "size does not divide ppn",
                                   to_string(alg), ppn, resolved));
                }
                continue;
              }
              groups.insert(resolved);
            }
          }
          for (int g : groups) {
            for (auto s : config.block_bytes) {
              points.push_back(Point{alg, impl, nodes, ppn, g, s});
            }
          }
        }
      }
    }
  }
  auto key = [](const Point& pt) {
    return std::tuple(static_cast<int>(pt.algorithm), static_cast<int>(pt.impl),
                      pt.n_nodes, pt.ppn, pt.group_size, pt.block_bytes);
  };
  std::ranges::sort(points, [&](const Point& a, const Point& b) {
    return key(a) < key(b);
  });
  auto dup = std::ranges::unique(points, [&](const Point& a, const Point& b) {
    return key(a) == key(b);
  });
  points.erase(dup.begin(), dup.end());
  return points;
}

std::vector<PointResult> run_points(const std::vector<Point>& points,
                                    const RunOptions& options, int jobs) {
  std::vector<PointResult> results(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        results[i] = evaluate(points[i], options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(jobs, 1, 256);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace a2a::harness
