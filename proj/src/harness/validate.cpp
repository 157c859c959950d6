#include <random>

#include <fmt/format.h>

#include "a2a/error.hpp"
#include "a2a/harness.hpp"

namespace a2a::harness {

namespace {

std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int d = 1; d <= n; ++d) {
    if (n % d == 0) out.push_back(d);
  }
  return out;
}

void add_points(std::vector<Point>& out, AlgorithmKind alg, int nodes, int ppn,
                std::uint64_t s, const std::vector<int>& groups) {
  const std::vector<ExchangeImpl> impls =
      uses_exchange_impl(alg)
          ? std::vector<ExchangeImpl>{ExchangeImpl::pairwise, ExchangeImpl::nonblocking}
          : std::vector<ExchangeImpl>{ExchangeImpl::pairwise};
  for (auto impl : impls) {
    for (int g : groups) out.push_back(Point{alg, impl, nodes, ppn, g, s});
  }
}

std::optional<ValidateFailure> check(const Point& point,
                                     const std::optional<std::size_t>& corrupt) {
  RunOptions options;
  options.mode = PayloadMode::checked;
  options.corrupt_repack = corrupt;
  try {
    evaluate(point, options);
  } catch (const CorrectnessError& e) {
    return ValidateFailure{point, e.what(), e.rank(), e.block(), e.byte()};
  } catch (const ScheduleError& e) {
    return ValidateFailure{point, e.what(), {}, {}, {}};
  }
  return std::nullopt;
}

}  // namespace

std::vector<Point> validation_grid(const ValidateConfig& config) {
  if (config.max_nodes < 1 || config.max_ppn < 1 || config.max_bytes < 1) {
    throw ConfigError("validate bounds must be >= 1");
  }
  std::vector<Point> points;
  for (auto alg : config.algorithms) {
    for (int nodes = 1; nodes <= config.max_nodes; ++nodes) {
      for (int ppn = 1; ppn <= config.max_ppn; ppn *= 2) {
        const auto groups =
            uses_group_size(alg) ? divisors(ppn) : std::vector<int>{ppn};
        for (std::uint64_t s = 1; s <= config.max_bytes; s *= 4) {
          add_points(points, alg, nodes, ppn, s, groups);
        }
      }
    }
  }
  return points;
}

ValidateReport validate(const ValidateConfig& config) {
  ValidateReport report;
  for (const auto& point : validation_grid(config)) {
    ++report.cases;
    if (auto failure = check(point, config.corrupt_repack)) {
      report.failure = std::move(failure);
      return report;
    }
  }
  if (config.algorithms.empty()) return report;

  // Random shapes cover non-power-of-two node counts, ppn and block sizes.
  std::mt19937_64 rng(config.seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  for (int i = 0; i < config.random_cases; ++i) {
    const auto alg = config.algorithms[static_cast<std::size_t>(
        pick(0, static_cast<int>(config.algorithms.size()) - 1))];
    const int nodes = pick(1, config.max_nodes + 2);
    const int ppn = pick(1, config.max_ppn + 4);
    const auto s = static_cast<std::uint64_t>(
        pick(1, static_cast<int>(std::min<std::uint64_t>(config.max_bytes, 1 << 20))));
    const auto groups = divisors(ppn);
    const int g = uses_group_size(alg)
                      ? groups[static_cast<std::size_t>(
                            pick(0, static_cast<int>(groups.size()) - 1))]
                      : ppn;
    const auto impl = uses_exchange_impl(alg) && pick(0, 1) == 1
                          ? ExchangeImpl::nonblocking
                          : ExchangeImpl::pairwise;
    ++report.cases;
    if (auto failure = check(Point{alg, impl, nodes, ppn, g, s}, config.corrupt_repack)) {
      report.failure = std::move(failure);
      return report;
    }
  }
  return report;
}

}  // namespace a2a::harness
