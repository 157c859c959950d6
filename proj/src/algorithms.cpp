#include "a2a/algorithms.hpp"

#include <fmt/format.h>

#include "a2a/error.hpp"

namespace a2a {

namespace {

using u64 = std::uint64_t;

std::vector<u64> leader_sizes(const Topology& topo, u64 bytes) {
  std::vector<u64> out(static_cast<std::size_t>(topo.size()), 0);
  for (Rank r = 0; r < topo.size(); r += topo.group_size()) {
    out[static_cast<std::size_t>(r)] = bytes;
  }
  return out;
}

std::vector<u64> uniform_sizes(const Topology& topo, u64 bytes) {
  return std::vector<u64>(static_cast<std::size_t>(topo.size()), bytes);
}

RepackPhase::Volume leader_volume(const Topology& topo, u64 bytes) {
  return [topo, bytes](Rank r) { return topo.is_leader(r) ? bytes : u64{0}; };
}

// Gather slots, exchange send/receive, scatter source and the extra
// buffers of the multileader variant.
const BufferId kGathered = scratch_buffer(0);
const BufferId kLeaderSend = scratch_buffer(1);
const BufferId kLeaderRecv = scratch_buffer(2);
const BufferId kScatterSrc = scratch_buffer(3);
const BufferId kLeaderGroupSend = scratch_buffer(4);
const BufferId kLeaderGroupRecv = scratch_buffer(5);

PhasePtr gather_phase(const Topology& topo, u64 s, ExchangeImpl impl) {
  const u64 p = static_cast<u64>(topo.size());
  return std::make_shared<RootedPhase>(
      topo, RootedPhase::Config{RootedPhase::Direction::gather, p * s,
                                kSendBuffer, kGathered, impl});
}

PhasePtr scatter_phase(const Topology& topo, u64 s, ExchangeImpl impl) {
  const u64 p = static_cast<u64>(topo.size());
  return std::make_shared<RootedPhase>(
      topo, RootedPhase::Config{RootedPhase::Direction::scatter, p * s,
                                kScatterSrc, kRecvBuffer, impl});
}

}  // namespace

std::string_view to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::direct: return "direct";
    case AlgorithmKind::bruck: return "bruck";
    case AlgorithmKind::hierarchical: return "hierarchical";
    case AlgorithmKind::node_aware: return "node-aware";
    case AlgorithmKind::multileader_node_aware: return "multileader-node-aware";
  }
  return "?";
}

std::optional<AlgorithmKind> parse_algorithm(std::string_view text) {
  for (auto kind : kAllAlgorithms) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

bool uses_group_size(AlgorithmKind kind) {
  return kind == AlgorithmKind::hierarchical ||
         kind == AlgorithmKind::node_aware ||
         kind == AlgorithmKind::multileader_node_aware;
}

bool uses_exchange_impl(AlgorithmKind kind) {
  return kind != AlgorithmKind::bruck;
}

Schedule build_direct(const Topology& topo, u64 s, ExchangeImpl impl) {
  Schedule sched(topo.size(), s);
  sched.add(std::make_shared<RepackPhase>(
      [s](Rank r, std::vector<Move>& out) {
        const u64 at = static_cast<u64>(r) * s;
        out.push_back({kSendBuffer, at, kRecvBuffer, at, s});
      },
      [s](Rank) { return s; }));
  sched.add(std::make_shared<ExchangePhase>(
      PhaseTag::direct, topo,
      ExchangePhase::Config{CommKind::world, false, s, kSendBuffer, kRecvBuffer,
                            impl}));
  return sched;
}

Schedule build_bruck(const Topology& topo, u64 s) {
  const int p = topo.size();
  const u64 total = static_cast<u64>(p) * s;
  const BufferId work = scratch_buffer(0);
  Schedule sched(p, s);
  sched.set_scratch(0, uniform_sizes(topo, total));

  // Block destined for rank r + i moves to index i.
  sched.add(std::make_shared<RepackPhase>(
      [p, s, work](Rank r, std::vector<Move>& out) {
        for (int i = 0; i < p; ++i) {
          const auto src = static_cast<u64>((r + i) % p);
          out.push_back({kSendBuffer, src * s, work, static_cast<u64>(i) * s, s});
        }
      },
      [total](Rank) { return total; }));
  sched.add(std::make_shared<BruckPhase>(p, s, work));
  // Index i now holds the block from rank r - i.
  sched.add(std::make_shared<RepackPhase>(
      [p, s, work](Rank r, std::vector<Move>& out) {
        for (int i = 0; i < p; ++i) {
          const auto from = static_cast<u64>((r - i + p) % p);
          out.push_back({work, static_cast<u64>(i) * s, kRecvBuffer, from * s, s});
        }
      },
      [total](Rank) { return total; }));
  return sched;
}

Schedule build_hierarchical(const Topology& topo, u64 s, ExchangeImpl impl) {
  const u64 p = static_cast<u64>(topo.size());
  const u64 g = static_cast<u64>(topo.group_size());
  const u64 regions = static_cast<u64>(topo.n_regions());
  const u64 leader_bytes = g * p * s;

  Schedule sched(topo.size(), s);
  for (int n = 0; n < 4; ++n) sched.set_scratch(n, leader_sizes(topo, leader_bytes));

  sched.add(gather_phase(topo, s, impl));

  // Leader send layout: destination region, source member, destination
  // member. The own-region chunk goes straight to the receive side.
  sched.add(std::make_shared<RepackPhase>(
      [topo, p, g, regions, s](Rank r, std::vector<Move>& out) {
        if (!topo.is_leader(r)) return;
        const u64 a = static_cast<u64>(topo.region_of(r));
        for (u64 b = 0; b < regions; ++b) {
          for (u64 q = 0; q < g; ++q) {
            const BufferId src = q == 0 ? kSendBuffer : kGathered;
            const u64 src_off = ((q == 0 ? 0 : q * p) + b * g) * s;
            const BufferId dst = b == a ? kLeaderRecv : kLeaderSend;
            out.push_back({src, src_off, dst, (b * g + q) * g * s, g * s});
          }
        }
      },
      leader_volume(topo, leader_bytes)));

  sched.add(std::make_shared<ExchangePhase>(
      PhaseTag::leader_alltoall, topo,
      ExchangePhase::Config{CommKind::group, true, g * g * s, kLeaderSend,
                            kLeaderRecv, impl}));

  // Chunk from region a holds (source member q, destination member q').
  sched.add(std::make_shared<RepackPhase>(
      [topo, p, g, regions, s](Rank r, std::vector<Move>& out) {
        if (!topo.is_leader(r)) return;
        for (u64 a = 0; a < regions; ++a) {
          for (u64 q = 0; q < g; ++q) {
            const u64 src_rank = a * g + q;
            for (u64 qd = 0; qd < g; ++qd) {
              const u64 from = ((a * g + q) * g + qd) * s;
              if (qd == 0) {
                out.push_back({kLeaderRecv, from, kRecvBuffer, src_rank * s, s});
              } else {
                out.push_back(
                    {kLeaderRecv, from, kScatterSrc, (qd * p + src_rank) * s, s});
              }
            }
          }
        }
      },
      leader_volume(topo, leader_bytes)));

  sched.add(scatter_phase(topo, s, impl));
  return sched;
}

Schedule build_node_aware(const Topology& topo, u64 s, ExchangeImpl impl) {
  const u64 p = static_cast<u64>(topo.size());
  const u64 g = static_cast<u64>(topo.group_size());
  const u64 regions = static_cast<u64>(topo.n_regions());
  const BufferId by_source = scratch_buffer(0);  // (source region, owner)
  const BufferId by_owner = scratch_buffer(1);   // (owner, source region)
  const BufferId gathered = scratch_buffer(2);   // (source member, region)

  Schedule sched(topo.size(), s);
  for (int n = 0; n < 3; ++n) sched.set_scratch(n, uniform_sizes(topo, p * s));

  // The send buffer is already ordered by destination region; only the
  // chunk for the own region has to be placed.
  sched.add(std::make_shared<RepackPhase>(
      [topo, g, s, by_source](Rank r, std::vector<Move>& out) {
        const u64 at = static_cast<u64>(topo.region_of(r)) * g * s;
        out.push_back({kSendBuffer, at, by_source, at, g * s});
      },
      [g, s](Rank) { return g * s; }));

  sched.add(std::make_shared<ExchangePhase>(
      PhaseTag::inter_alltoall, topo,
      ExchangePhase::Config{CommKind::group, false, g * s, kSendBuffer,
                            by_source, impl}));

  sched.add(std::make_shared<RepackPhase>(
      [g, regions, s, by_source, by_owner, gathered](Rank r,
                                                     std::vector<Move>& out) {
        const u64 me = static_cast<u64>(r) % g;
        for (u64 owner = 0; owner < g; ++owner) {
          const BufferId dst = owner == me ? gathered : by_owner;
          const u64 base = owner == me ? me * regions : owner * regions;
          for (u64 a = 0; a < regions; ++a) {
            out.push_back({by_source, (a * g + owner) * s, dst, (base + a) * s, s});
          }
        }
      },
      [p, s](Rank) { return p * s; }));

  sched.add(std::make_shared<ExchangePhase>(
      PhaseTag::intra_alltoall, topo,
      ExchangePhase::Config{CommKind::local, false, regions * s, by_owner,
                            gathered, impl}));

  sched.add(std::make_shared<RepackPhase>(
      [g, regions, s, gathered](Rank, std::vector<Move>& out) {
        for (u64 q = 0; q < g; ++q) {
          for (u64 a = 0; a < regions; ++a) {
            out.push_back(
                {gathered, (q * regions + a) * s, kRecvBuffer, (a * g + q) * s, s});
          }
        }
      },
      [p, s](Rank) { return p * s; }));
  return sched;
}

Schedule build_multileader_node_aware(const Topology& topo, u64 s,
                                      ExchangeImpl impl) {
  const u64 p = static_cast<u64>(topo.size());
  const u64 g = static_cast<u64>(topo.group_size());
  const u64 ppn = static_cast<u64>(topo.ppn());
  const u64 nodes = static_cast<u64>(topo.n_nodes());
  const u64 leaders = static_cast<u64>(topo.leaders_per_node());
  const u64 leader_bytes = g * p * s;

  Schedule sched(topo.size(), s);
  for (int n = 0; n < 6; ++n) sched.set_scratch(n, leader_sizes(topo, leader_bytes));

  sched.add(gather_phase(topo, s, impl));

  // (destination node, source member, destination local rank)
  sched.add(std::make_shared<RepackPhase>(
      [topo, p, g, ppn, nodes, s](Rank r, std::vector<Move>& out) {
        if (!topo.is_leader(r)) return;
        const u64 m = static_cast<u64>(topo.node_of(r));
        for (u64 n = 0; n < nodes; ++n) {
          for (u64 q = 0; q < g; ++q) {
            const BufferId src = q == 0 ? kSendBuffer : kGathered;
            const u64 src_off = ((q == 0 ? 0 : q * p) + n * ppn) * s;
            const BufferId dst = n == m ? kLeaderRecv : kLeaderSend;
            out.push_back({src, src_off, dst, (n * g + q) * ppn * s, ppn * s});
          }
        }
      },
      leader_volume(topo, leader_bytes)));

  sched.add(std::make_shared<ExchangePhase>(
      PhaseTag::inter_alltoall, topo,
      ExchangePhase::Config{CommKind::node_peer, true, g * ppn * s, kLeaderSend,
                            kLeaderRecv, impl}));

  // (destination group, source node, source member, destination member)
  sched.add(std::make_shared<RepackPhase>(
      [topo, g, ppn, nodes, leaders, s](Rank r, std::vector<Move>& out) {
        if (!topo.is_leader(r)) return;
        const u64 t = static_cast<u64>(topo.coord_of(r).group_in_node);
        for (u64 td = 0; td < leaders; ++td) {
          const BufferId dst = td == t ? kLeaderGroupRecv : kLeaderGroupSend;
          for (u64 n = 0; n < nodes; ++n) {
            for (u64 q = 0; q < g; ++q) {
              const u64 from = ((n * g + q) * ppn + td * g) * s;
              const u64 to = ((td * nodes + n) * g + q) * g * s;
              out.push_back({kLeaderRecv, from, dst, to, g * s});
            }
          }
        }
      },
      leader_volume(topo, leader_bytes)));

  sched.add(std::make_shared<ExchangePhase>(
      PhaseTag::intra_alltoall, topo,
      ExchangePhase::Config{CommKind::leader_group, true, nodes * g * g * s,
                            kLeaderGroupSend, kLeaderGroupRecv, impl}));

  // Chunk from group t holds (source node, source member, destination member).
  sched.add(std::make_shared<RepackPhase>(
      [topo, p, g, ppn, nodes, leaders, s](Rank r, std::vector<Move>& out) {
        if (!topo.is_leader(r)) return;
        for (u64 t = 0; t < leaders; ++t) {
          for (u64 n = 0; n < nodes; ++n) {
            for (u64 q = 0; q < g; ++q) {
              const u64 src_rank = n * ppn + t * g + q;
              for (u64 qd = 0; qd < g; ++qd) {
                const u64 from = (((t * nodes + n) * g + q) * g + qd) * s;
                if (qd == 0) {
                  out.push_back(
                      {kLeaderGroupRecv, from, kRecvBuffer, src_rank * s, s});
                } else {
                  out.push_back({kLeaderGroupRecv, from, kScatterSrc,
                                 (qd * p + src_rank) * s, s});
                }
              }
            }
          }
        }
      },
      leader_volume(topo, leader_bytes)));

  sched.add(scatter_phase(topo, s, impl));
  return sched;
}

Topology topology_for(const Topology& topo, const AlgorithmSpec& spec) {
  return spec.group_size ? topo.with_group_size(*spec.group_size) : topo;
}

Schedule build_schedule(const Topology& topo, const AlgorithmSpec& spec,
                        u64 block_bytes) {
  if (block_bytes == 0) throw ConfigError("block size must be >= 1 byte");
  const Topology t = topology_for(topo, spec);
  switch (spec.kind) {
    case AlgorithmKind::direct: return build_direct(t, block_bytes, spec.impl);
    case AlgorithmKind::bruck: return build_bruck(t, block_bytes);
    case AlgorithmKind::hierarchical:
      return build_hierarchical(t, block_bytes, spec.impl);
    case AlgorithmKind::node_aware:
      return build_node_aware(t, block_bytes, spec.impl);
    case AlgorithmKind::multileader_node_aware:
      return build_multileader_node_aware(t, block_bytes, spec.impl);
  }
  throw ConfigError("unknown algorithm");
}

void check_against_oracle(const Topology& topo,
                          const std::vector<BlockBuffer>& inputs,
                          const std::vector<BlockBuffer>& outputs) {
  const auto expected = oracle_transpose(topo, inputs);
  if (auto bad = first_mismatch(outputs, expected)) {
    const auto r = static_cast<std::size_t>(bad->rank);
    std::string detail;
    if (r < outputs.size() && r < expected.size() &&
        bad->block < expected[r].n_blocks()) {
      detail = fmt::format(
          ": got {:#04x}, expected {:#04x}",
          std::to_integer<int>(outputs[r].block(bad->block)[bad->byte]),
          std::to_integer<int>(expected[r].block(bad->block)[bad->byte]));
    }
    throw CorrectnessError(
        fmt::format("correctness failure on {} at rank {}, block {}, byte {}{}",
                    topo.describe(), bad->rank, bad->block, bad->byte, detail),
        bad->rank, bad->block, bad->byte);
  }
}

RunResult run_checked(const Topology& topo, const Schedule& schedule) {
  auto inputs = seed_payload(topo, schedule.block_bytes());
  auto result = run_schedule(topo, schedule, inputs);
  check_against_oracle(topo, inputs, result.outputs);
  return result;
}

RunResult run_alltoall(const Topology& topo, const AlgorithmSpec& spec,
                       u64 block_bytes) {
  const Topology t = topology_for(topo, spec);
  return run_checked(t, build_schedule(t, spec, block_bytes));
}

}  // namespace a2a
