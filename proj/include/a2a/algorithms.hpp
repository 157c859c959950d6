#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "a2a/buffer.hpp"
#include "a2a/schedule.hpp"
#include "a2a/topology.hpp"
#include "a2a/vcomm.hpp"

namespace a2a {

enum class AlgorithmKind : std::uint8_t {
  direct,
  bruck,
  hierarchical,
  node_aware,
  multileader_node_aware,
};

inline constexpr AlgorithmKind kAllAlgorithms[] = {
    AlgorithmKind::direct, AlgorithmKind::bruck, AlgorithmKind::hierarchical,
    AlgorithmKind::node_aware, AlgorithmKind::multileader_node_aware};

/// CLI names: direct, bruck, hierarchical, node-aware, multileader-node-aware.
std::string_view to_string(AlgorithmKind kind);
std::optional<AlgorithmKind> parse_algorithm(std::string_view text);

/// True for algorithms whose behaviour depends on the aggregation group size.
bool uses_group_size(AlgorithmKind kind);
/// True for algorithms whose internal exchanges honour ExchangeImpl.
bool uses_exchange_impl(AlgorithmKind kind);

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::direct;
  ExchangeImpl impl = ExchangeImpl::pairwise;
  /// Ranks per aggregation group / per leader. Unset keeps the topology's.
  std::optional<int> group_size;
};

/// Pairwise: p-1 steps, step i sends block r+i to rank r+i. Nonblocking:
/// one step with all p-1 messages. The self block is a local repack.
Schedule build_direct(const Topology& topo, std::uint64_t block_bytes,
                      ExchangeImpl impl);

/// Radix-2 Bruck: rotate, ceil(log2 p) exchange steps, rotate back.
Schedule build_bruck(const Topology& topo, std::uint64_t block_bytes);

/// Gather to one leader per region, all-to-all among every leader, scatter.
/// group_size == ppn is the single-leader variant, smaller is multi-leader.
Schedule build_hierarchical(const Topology& topo, std::uint64_t block_bytes,
                            ExchangeImpl impl);

/// All-to-all between corresponding ranks of every region carrying whole
/// regions' data, then redistribution inside each region. group_size == ppn
/// is node-aware aggregation, smaller is locality-aware.
Schedule build_node_aware(const Topology& topo, std::uint64_t block_bytes,
                          ExchangeImpl impl);

/// Gather to leaders (one per group_size ranks), node-aware exchange between
/// corresponding leaders of every node, exchange among the leaders of each
/// node, scatter.
Schedule build_multileader_node_aware(const Topology& topo,
                                      std::uint64_t block_bytes,
                                      ExchangeImpl impl);

/// Topology the spec runs on: `topo` with spec.group_size applied.
Topology topology_for(const Topology& topo, const AlgorithmSpec& spec);

Schedule build_schedule(const Topology& topo, const AlgorithmSpec& spec,
                        std::uint64_t block_bytes);

/// Throws CorrectnessError naming the first differing (rank, block, byte).
void check_against_oracle(const Topology& topo,
                          const std::vector<BlockBuffer>& inputs,
                          const std::vector<BlockBuffer>& outputs);

/// Seeds the payload, builds and runs the schedule, and verifies the result
/// against oracle_transpose before returning it.
RunResult run_alltoall(const Topology& topo, const AlgorithmSpec& spec,
                       std::uint64_t block_bytes);

/// Same as run_alltoall for an already built (possibly corrupted) schedule.
RunResult run_checked(const Topology& topo, const Schedule& schedule);

}  // namespace a2a
