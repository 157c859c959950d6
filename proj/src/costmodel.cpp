#include "a2a/costmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "a2a/error.hpp"

namespace a2a {

namespace {

constexpr const char* kLevelSuffix[kLevelCount] = {"l0", "l1", "l2"};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double* field(CostParams& p, std::string_view key) {
  for (std::size_t l = 0; l < kLevelCount; ++l) {
    if (key == fmt::format("alpha.{}", kLevelSuffix[l])) return &p.alpha[l];
    if (key == fmt::format("beta.{}", kLevelSuffix[l])) return &p.beta[l];
  }
  if (key == "nic_bandwidth") return &p.nic_bandwidth;
  if (key == "queue_penalty") return &p.queue_penalty;
  if (key == "copy_beta") return &p.copy_beta;
  return nullptr;
}

}  // namespace

CostParams CostParams::defaults() {
  CostParams p;
  p.alpha = {3e-7, 5e-7, 2e-6};
  p.beta = {5e-11, 1e-10, 5e-10};
  p.nic_bandwidth = 2.5e10;
  p.queue_penalty = 0;
  p.copy_beta = 2e-11;
  return p;
}

CostParams CostParams::scaled(double c) const {
  CostParams p = *this;
  for (auto& a : p.alpha) a *= c;
  for (auto& b : p.beta) b *= c;
  p.nic_bandwidth /= c;
  p.queue_penalty *= c;
  p.copy_beta *= c;
  return p;
}

void CostParams::validate() const {
  auto check = [](double v, const char* name) {
    if (std::isnan(v) || v < 0) {
      throw ConfigError(fmt::format("cost parameter {} must be >= 0, got {}",
                                    name, v));
    }
  };
  for (std::size_t l = 0; l < kLevelCount; ++l) {
    check(alpha[l], "alpha");
    check(beta[l], "beta");
  }
  check(queue_penalty, "queue_penalty");
  check(copy_beta, "copy_beta");
  if (std::isnan(nic_bandwidth) || nic_bandwidth <= 0) {
    throw ConfigError(
        fmt::format("nic_bandwidth must be > 0, got {}", nic_bandwidth));
  }
}

std::vector<std::string> CostParams::warnings() const {
  std::vector<std::string> out;
  if (alpha[2] < alpha[1] || alpha[1] < alpha[0]) {
    out.push_back(fmt::format(
        "latencies are not ordered alpha.l2 >= alpha.l1 >= alpha.l0 ({}, {}, {})",
        alpha[2], alpha[1], alpha[0]));
  }
  return out;
}

CostParams parse_params(std::istream& in) {
  CostParams params = CostParams::defaults();
  std::set<std::string, std::less<>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("params line {}: expected key = value", line_no));
    }
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    double* slot = field(params, key);
    if (slot == nullptr) {
      throw ConfigError(fmt::format("params line {}: unknown key '{}'", line_no, key));
    }
    if (!seen.emplace(key).second) {
      throw ConfigError(fmt::format("params line {}: duplicate key '{}'", line_no, key));
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw ConfigError(fmt::format("params line {}: bad number '{}' for {}",
                                    line_no, value, key));
    }
    *slot = v;
  }
  params.validate();
  return params;
}

CostParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open params file {}", path.string()));
  return parse_params(in);
}

void write_params(std::ostream& out, const CostParams& params) {
  for (std::size_t l = 0; l < kLevelCount; ++l) {
    fmt::print(out, "alpha.{} = {}\n", kLevelSuffix[l], params.alpha[l]);
  }
  for (std::size_t l = 0; l < kLevelCount; ++l) {
    fmt::print(out, "beta.{} = {}\n", kLevelSuffix[l], params.beta[l]);
  }
  fmt::print(out, "nic_bandwidth = {}\n", params.nic_bandwidth);
  fmt::print(out, "queue_penalty = {}\n", params.queue_penalty);
  fmt::print(out, "copy_beta = {}\n", params.copy_beta);
}

// ---------------------------------------------------------------------------

CostAccumulator::CostAccumulator(const Topology& topo, const CostParams& params)
    : topo_(topo),
      params_(params),
      node_l2_bytes_(static_cast<std::size_t>(topo.n_nodes()), 0),
      rank_time_(static_cast<std::size_t>(topo.size()), 0),
      rank_l2_time_(static_cast<std::size_t>(topo.size()), 0),
      recv_posts_(static_cast<std::size_t>(topo.size()), 0),
      stamp_(static_cast<std::size_t>(topo.size()), 0),
      rank_bytes_sent_(static_cast<std::size_t>(topo.size()), 0) {
  params.validate();
}

void CostAccumulator::begin_phase(const PhaseRecord& header) {
  current_ = PhaseCost{};
  current_.tag = header.tag;
  current_.concurrent = header.concurrent;
  current_.steps = header.step_count;
}

void CostAccumulator::local_copy(Rank, std::uint64_t bytes) {
  current_.max_copy_bytes = std::max(current_.max_copy_bytes, bytes);
}

void CostAccumulator::touch(Rank rank) {
  const auto r = static_cast<std::size_t>(rank);
  if (stamp_[r] != step_stamp_) {
    stamp_[r] = step_stamp_;
    rank_time_[r] = 0;
    rank_l2_time_[r] = 0;
    recv_posts_[r] = 0;
    touched_ranks_.push_back(rank);
  }
}

void CostAccumulator::message(const TraceEvent& e) {
  touch(e.src);
  const auto src = static_cast<std::size_t>(e.src);
  const auto lvl = static_cast<std::size_t>(e.level);
  const double cost =
      params_.alpha[lvl] + static_cast<double>(e.bytes) * params_.beta[lvl];
  rank_time_[src] += cost;
  if (e.level == Level::l2) {
    rank_l2_time_[src] += cost;
    const auto node = static_cast<std::size_t>(topo_.node_of(e.src));
    if (node_l2_bytes_[node] == 0) touched_nodes_.push_back(static_cast<int>(node));
    node_l2_bytes_[node] += e.bytes;
  }
  if (current_.concurrent) {
    touch(e.dst);
    ++recv_posts_[static_cast<std::size_t>(e.dst)];
  }
  current_.traffic.add(e);
  rank_bytes_sent_[src] += e.bytes;
}

void CostAccumulator::end_step(std::uint64_t) {
  double slowest = 0;
  double slowest_l2 = 0;
  for (Rank rank : touched_ranks_) {
    const auto r = static_cast<std::size_t>(rank);
    double t = rank_time_[r];
    if (current_.concurrent) {
      t += params_.queue_penalty * static_cast<double>(recv_posts_[r]);
    }
    slowest = std::max(slowest, t);
    slowest_l2 = std::max(slowest_l2, rank_l2_time_[r]);
  }
  touched_ranks_.clear();
  ++step_stamp_;

  double nic = 0;
  for (int node : touched_nodes_) {
    const auto n = static_cast<std::size_t>(node);
    nic = std::max(nic, static_cast<double>(node_l2_bytes_[n]) / params_.nic_bandwidth);
    node_l2_bytes_[n] = 0;
  }
  touched_nodes_.clear();

  current_.seconds += std::max(slowest, nic);
  current_.l2_seconds += std::max(slowest_l2, nic);
}

void CostAccumulator::end_phase() {
  current_.seconds += params_.copy_beta * static_cast<double>(current_.max_copy_bytes);
  report_.total_seconds += current_.seconds;
  report_.l2_seconds += current_.l2_seconds;
  for (std::size_t l = 0; l < kLevelCount; ++l) {
    report_.traffic.messages[l] += current_.traffic.messages[l];
    report_.traffic.bytes[l] += current_.traffic.bytes[l];
  }
  report_.message_steps += current_.steps;
  report_.max_rank_bytes_sent =
      *std::ranges::max_element(rank_bytes_sent_);
  report_.phases.push_back(current_);
}

CostReport predict(const Trace& trace, const Topology& topo,
                   const CostParams& params) {
  CostAccumulator acc(topo, params);
  replay(trace, acc);
  return acc.take();
}

std::vector<BreakdownRow> breakdown(const CostReport& report) {
  std::vector<BreakdownRow> rows;
  rows.reserve(report.phases.size());
  for (const auto& ph : report.phases) {
    rows.push_back({ph.tag, ph.seconds, ph.traffic.bytes});
  }
  return rows;
}

void write_breakdown(std::ostream& out, const std::vector<BreakdownRow>& rows) {
  fmt::print(out, "{:<16} {:>14} {:>14} {:>14} {:>14}\n", "phase", "seconds",
             "bytes_l0", "bytes_l1", "bytes_l2");
  for (const auto& row : rows) {
    fmt::print(out, "{:<16} {:>14.6e} {:>14} {:>14} {:>14}\n",
               to_string(row.tag), row.seconds, row.bytes[0], row.bytes[1],
               row.bytes[2]);
  }
}

}  // namespace a2a
