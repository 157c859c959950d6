#include "a2a/schedule.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "a2a/error.hpp"

namespace a2a {

std::string_view to_string(PhaseTag tag) {
  switch (tag) {
    case PhaseTag::gather: return "gather";
    case PhaseTag::scatter: return "scatter";
    case PhaseTag::inter_alltoall: return "inter-alltoall";
    case PhaseTag::intra_alltoall: return "intra-alltoall";
    case PhaseTag::leader_alltoall: return "leader-alltoall";
    case PhaseTag::direct: return "direct";
    case PhaseTag::bruck_step: return "bruck-step";
    case PhaseTag::repack: return "repack";
  }
  return "?";
}

std::optional<PhaseTag> parse_phase_tag(std::string_view text) {
  for (auto tag : {PhaseTag::gather, PhaseTag::scatter, PhaseTag::inter_alltoall,
                   PhaseTag::intra_alltoall, PhaseTag::leader_alltoall,
                   PhaseTag::direct, PhaseTag::bruck_step, PhaseTag::repack}) {
    if (to_string(tag) == text) return tag;
  }
  return std::nullopt;
}

std::string_view to_string(ExchangeImpl impl) {
  return impl == ExchangeImpl::pairwise ? "pairwise" : "nonblocking";
}

std::optional<ExchangeImpl> parse_exchange_impl(std::string_view text) {
  if (text == "pairwise") return ExchangeImpl::pairwise;
  if (text == "nonblocking") return ExchangeImpl::nonblocking;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Phase defaults

void Phase::posts(std::size_t, Rank, std::vector<Post>&,
                  std::vector<Post>&) const {}

void Phase::send_segments(std::size_t, Rank, Rank,
                          std::vector<Segment>&) const {}

void Phase::recv_segments(std::size_t, Rank, Rank,
                          std::vector<Segment>&) const {}

std::uint64_t Phase::local_bytes(Rank) const { return 0; }

void Phase::local_moves(Rank, std::vector<Move>&) const {}

bool Phase::has_work(int n_ranks) const {
  if (step_count() > 0) return true;
  for (Rank r = 0; r < n_ranks; ++r) {
    if (local_bytes(r) > 0) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// ExchangePhase

ExchangePhase::ExchangePhase(PhaseTag tag, const Topology& topo, Config config)
    : Phase(tag, config.impl == ExchangeImpl::nonblocking),
      topo_(topo),
      config_(config),
      comm_size_(topo.membership(config.family, 0)->size) {
  if (config.chunk == 0) throw ConfigError("exchange chunk must be non-empty");
}

std::optional<Membership> ExchangePhase::participant(Rank rank) const {
  if (config_.leaders_only && !topo_.is_leader(rank)) return std::nullopt;
  return topo_.membership(config_.family, rank);
}

std::size_t ExchangePhase::step_count() const {
  if (comm_size_ <= 1) return 0;
  return config_.impl == ExchangeImpl::pairwise
             ? static_cast<std::size_t>(comm_size_ - 1)
             : 1;
}

void ExchangePhase::posts(std::size_t step, Rank rank,
                          std::vector<Post>& sends,
                          std::vector<Post>& recvs) const {
  auto me = participant(rank);
  if (!me || me->size <= 1) return;
  const int m = me->size;
  auto post = [&](int k) {
    sends.push_back({topo_.member(config_.family, rank, (me->index + k) % m),
                     config_.chunk});
    recvs.push_back(
        {topo_.member(config_.family, rank, (me->index - k + m) % m),
         config_.chunk});
  };
  if (config_.impl == ExchangeImpl::pairwise) {
    post(static_cast<int>(step) + 1);
  } else {
    for (int k = 1; k < m; ++k) post(k);
  }
}

void ExchangePhase::send_segments(std::size_t, Rank, Rank peer,
                                  std::vector<Segment>& out) const {
  const auto j = static_cast<std::uint64_t>(
      topo_.membership(config_.family, peer)->index);
  out.push_back({config_.src, j * config_.chunk, config_.chunk});
}

void ExchangePhase::recv_segments(std::size_t, Rank, Rank peer,
                                  std::vector<Segment>& out) const {
  const auto i = static_cast<std::uint64_t>(
      topo_.membership(config_.family, peer)->index);
  out.push_back({config_.dst, i * config_.chunk, config_.chunk});
}

// ---------------------------------------------------------------------------
// RootedPhase

RootedPhase::RootedPhase(const Topology& topo, Config config)
    : Phase(config.direction == Direction::gather ? PhaseTag::gather
                                                  : PhaseTag::scatter,
            config.impl == ExchangeImpl::nonblocking),
      topo_(topo),
      config_(config) {
  if (config.chunk == 0) throw ConfigError("gather chunk must be non-empty");
}

std::size_t RootedPhase::step_count() const {
  const int g = topo_.group_size();
  if (g <= 1) return 0;
  return config_.impl == ExchangeImpl::pairwise ? static_cast<std::size_t>(g - 1)
                                                : 1;
}

void RootedPhase::posts(std::size_t step, Rank rank, std::vector<Post>& sends,
                        std::vector<Post>& recvs) const {
  const int g = topo_.group_size();
  const int index = rank % g;
  const Rank root = rank - index;
  const bool gather = config_.direction == Direction::gather;
  auto& root_side = gather ? recvs : sends;
  auto& member_side = gather ? sends : recvs;
  if (config_.impl == ExchangeImpl::pairwise) {
    const int active = static_cast<int>(step) + 1;
    if (index == 0) {
      root_side.push_back({root + active, config_.chunk});
    } else if (index == active) {
      member_side.push_back({root, config_.chunk});
    }
    return;
  }
  if (index == 0) {
    for (int k = 1; k < g; ++k) root_side.push_back({root + k, config_.chunk});
  } else {
    member_side.push_back({root, config_.chunk});
  }
}

void RootedPhase::send_segments(std::size_t, Rank rank, Rank peer,
                                std::vector<Segment>& out) const {
  if (config_.direction == Direction::gather) {
    out.push_back({config_.src, 0, config_.chunk});
  } else {
    const auto k = static_cast<std::uint64_t>(peer - rank);
    out.push_back({config_.src, k * config_.chunk, config_.chunk});
  }
}

void RootedPhase::recv_segments(std::size_t, Rank rank, Rank peer,
                                std::vector<Segment>& out) const {
  if (config_.direction == Direction::gather) {
    const auto k = static_cast<std::uint64_t>(peer - rank);
    out.push_back({config_.dst, k * config_.chunk, config_.chunk});
  } else {
    out.push_back({config_.dst, 0, config_.chunk});
  }
}

// ---------------------------------------------------------------------------
// BruckPhase

BruckPhase::BruckPhase(int n_ranks, std::uint64_t block_bytes, BufferId buffer)
    : Phase(PhaseTag::bruck_step, false),
      n_ranks_(n_ranks),
      block_bytes_(block_bytes),
      buffer_(buffer) {
  if (block_bytes == 0) throw ConfigError("block size must be >= 1 byte");
}

std::size_t BruckPhase::step_count() const {
  std::size_t steps = 0;
  while ((std::int64_t{1} << steps) < n_ranks_) ++steps;
  return steps;
}

std::uint64_t BruckPhase::blocks_in_step(std::size_t step) const {
  const auto p = static_cast<std::uint64_t>(n_ranks_);
  const std::uint64_t bit = std::uint64_t{1} << step;
  const std::uint64_t period = bit << 1;
  const std::uint64_t rem = p % period;
  return (p / period) * bit + (rem > bit ? rem - bit : 0);
}

void BruckPhase::posts(std::size_t step, Rank rank, std::vector<Post>& sends,
                       std::vector<Post>& recvs) const {
  const int dist = 1 << step;
  const std::uint64_t bytes = blocks_in_step(step) * block_bytes_;
  sends.push_back({(rank + dist) % n_ranks_, bytes});
  recvs.push_back({(rank - dist % n_ranks_ + n_ranks_) % n_ranks_, bytes});
}

void BruckPhase::index_segments(std::size_t step,
                                std::vector<Segment>& out) const {
  const std::uint64_t p = static_cast<std::uint64_t>(n_ranks_);
  const std::uint64_t bit = std::uint64_t{1} << step;
  for (std::uint64_t start = bit; start < p; start += bit << 1) {
    const std::uint64_t end = std::min(start + bit, p);
    out.push_back({buffer_, start * block_bytes_, (end - start) * block_bytes_});
  }
}

void BruckPhase::send_segments(std::size_t step, Rank, Rank,
                               std::vector<Segment>& out) const {
  index_segments(step, out);
}

void BruckPhase::recv_segments(std::size_t step, Rank, Rank,
                               std::vector<Segment>& out) const {
  index_segments(step, out);
}

// ---------------------------------------------------------------------------
// RepackPhase

RepackPhase::RepackPhase(Generator generator, Volume volume)
    : Phase(PhaseTag::repack, false),
      generator_(std::move(generator)),
      volume_(std::move(volume)) {}

std::uint64_t RepackPhase::local_bytes(Rank rank) const {
  return volume_(rank);
}

void RepackPhase::local_moves(Rank rank, std::vector<Move>& out) const {
  generator_(rank, out);
}

// ---------------------------------------------------------------------------
// Schedule

Schedule::Schedule(int n_ranks, std::uint64_t block_bytes)
    : n_ranks_(n_ranks), block_bytes_(block_bytes) {
  if (n_ranks < 1) throw ConfigError("schedule needs at least one rank");
  if (block_bytes == 0) throw ConfigError("block size must be >= 1 byte");
}

void Schedule::add(PhasePtr phase) {
  if (phase && phase->has_work(n_ranks_)) phases_.push_back(std::move(phase));
}

void Schedule::set_scratch(int n, std::vector<std::uint64_t> bytes_per_rank) {
  if (n < 0 || n > 200) throw ConfigError("scratch index out of range");
  if (bytes_per_rank.size() != static_cast<std::size_t>(n_ranks_)) {
    throw ConfigError("scratch size table must have one entry per rank");
  }
  if (scratch_.size() <= static_cast<std::size_t>(n)) {
    scratch_.resize(static_cast<std::size_t>(n) + 1,
                    std::vector<std::uint64_t>(static_cast<std::size_t>(n_ranks_), 0));
  }
  scratch_[static_cast<std::size_t>(n)] = std::move(bytes_per_rank);
}

std::uint64_t Schedule::buffer_bytes(BufferId id, Rank rank) const {
  if (id == kSendBuffer || id == kRecvBuffer) {
    return static_cast<std::uint64_t>(n_ranks_) * block_bytes_;
  }
  const std::size_t n = id.index - 2u;
  if (n >= scratch_.size()) return 0;
  return scratch_[n][static_cast<std::size_t>(rank)];
}

std::size_t Schedule::message_steps() const {
  std::size_t steps = 0;
  for (const auto& phase : phases_) steps += phase->step_count();
  return steps;
}

void Schedule::replace(std::size_t index, PhasePtr phase) {
  phases_.at(index) = std::move(phase);
}

namespace {

class CorruptedRepack final : public Phase {
 public:
  CorruptedRepack(PhasePtr inner, std::uint64_t block_bytes)
      : Phase(PhaseTag::repack, false),
        inner_(std::move(inner)),
        block_bytes_(block_bytes) {}

  std::uint64_t local_bytes(Rank rank) const override {
    return inner_->local_bytes(rank);
  }

  // Splits the moves into block-sized pieces and reads every piece from the
  // next piece's source.
  void local_moves(Rank rank, std::vector<Move>& out) const override {
    std::vector<Move> whole;
    inner_->local_moves(rank, whole);
    const std::size_t first = out.size();
    for (const auto& mv : whole) {
      for (std::uint64_t at = 0; at < mv.length; at += block_bytes_) {
        const std::uint64_t len = std::min(block_bytes_, mv.length - at);
        out.push_back({mv.src, mv.src_offset + at, mv.dst, mv.dst_offset + at, len});
      }
    }
    std::map<std::uint64_t, std::vector<std::size_t>> by_length;
    for (std::size_t i = first; i < out.size(); ++i) {
      by_length[out[i].length].push_back(i);
    }
    for (const auto& [length, idx] : by_length) {
      if (idx.size() < 2) continue;
      const Move head = out[idx.front()];
      for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        out[idx[k]].src = out[idx[k + 1]].src;
        out[idx[k]].src_offset = out[idx[k + 1]].src_offset;
      }
      out[idx.back()].src = head.src;
      out[idx.back()].src_offset = head.src_offset;
    }
  }

 private:
  PhasePtr inner_;
  std::uint64_t block_bytes_;
};

}  // namespace

std::size_t repack_count(const Schedule& schedule) {
  return static_cast<std::size_t>(std::ranges::count_if(
      schedule.phases(),
      [](const PhasePtr& ph) { return ph->tag() == PhaseTag::repack; }));
}

Schedule corrupt_repack(const Schedule& schedule, std::size_t ordinal) {
  Schedule out = schedule;
  std::size_t seen = 0;
  const auto phases = schedule.phases();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i]->tag() != PhaseTag::repack) continue;
    if (seen++ == ordinal) {
      out.replace(i, std::make_shared<CorruptedRepack>(phases[i], schedule.block_bytes()));
      return out;
    }
  }
  throw ConfigError(fmt::format("schedule has no repack #{} (only {})",
                                ordinal, seen));
}

}  // namespace a2a
