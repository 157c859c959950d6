#include "a2a/topology.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "a2a/error.hpp"

namespace a2a {

const char* to_string(CommKind kind) {
  switch (kind) {
    case CommKind::world: return "world";
    case CommKind::local: return "local";
    case CommKind::group: return "group";
    case CommKind::node_peer: return "node_peer";
    case CommKind::leader_group: return "leader_group";
  }
  return "?";
}

std::optional<int> CommGroup::index_of(Rank rank) const {
  auto it = std::lower_bound(members.begin(), members.end(), rank);
  if (it == members.end() || *it != rank) return std::nullopt;
  return static_cast<int>(it - members.begin());
}

Topology::Topology(int n_nodes, int ppn, int group_size)
    : n_nodes_(n_nodes), ppn_(ppn), group_size_(group_size) {
  if (n_nodes < 1 || ppn < 1 || group_size < 1) {
    throw ConfigError(fmt::format(
        "topology counts must be >= 1 (n_nodes={}, ppn={}, group_size={})",
        n_nodes, ppn, group_size));
  }
  if (ppn % group_size != 0) {
    throw ConfigError(fmt::format("group_size {} does not divide ppn {}",
                                  group_size, ppn));
  }
  // Byte offsets are 64-bit, but ranks and indices are int.
  if (static_cast<long long>(n_nodes) * ppn > (1LL << 30)) {
    throw ConfigError("too many ranks");
  }
}

void Topology::check_rank(Rank rank) const {
  if (rank < 0 || rank >= size()) {
    throw ConfigError(
        fmt::format("rank {} out of range [0, {})", rank, size()));
  }
}

RankCoord Topology::coord_of(Rank rank) const {
  check_rank(rank);
  RankCoord c;
  c.global_rank = rank;
  c.node = rank / ppn_;
  c.local_rank = rank % ppn_;
  c.group_in_node = c.local_rank / group_size_;
  c.rank_in_group = c.local_rank % group_size_;
  return c;
}

std::optional<Membership> Topology::membership(CommKind kind,
                                               Rank rank) const {
  check_rank(rank);
  switch (kind) {
    case CommKind::world:
      return Membership{rank, size()};
    case CommKind::local:
      return Membership{rank % group_size_, group_size_};
    case CommKind::group:
      return Membership{region_of(rank), n_regions()};
    case CommKind::node_peer:
      return Membership{node_of(rank), n_nodes_};
    case CommKind::leader_group:
      if (!is_leader(rank)) return std::nullopt;
      return Membership{(rank % ppn_) / group_size_, leaders_per_node()};
  }
  return std::nullopt;
}

Rank Topology::member(CommKind kind, Rank anchor, int index) const {
  check_rank(anchor);
  switch (kind) {
    case CommKind::world:
      return index;
    case CommKind::local:
      return region_of(anchor) * group_size_ + index;
    case CommKind::group:
      return index * group_size_ + anchor % group_size_;
    case CommKind::node_peer:
      return index * ppn_ + anchor % ppn_;
    case CommKind::leader_group:
      return node_of(anchor) * ppn_ + index * group_size_;
  }
  return -1;
}

CommGroup Topology::comm(CommKind kind, Rank rank) const {
  auto m = membership(kind, rank);
  if (!m) {
    throw ConfigError(fmt::format("rank {} is not a member of any {} comm",
                                  rank, to_string(kind)));
  }
  CommGroup g;
  g.members.reserve(static_cast<std::size_t>(m->size));
  for (int i = 0; i < m->size; ++i) g.members.push_back(member(kind, rank, i));
  return g;
}

std::string Topology::describe() const {
  return fmt::format("{}x{} (group {})", n_nodes_, ppn_, group_size_);
}

RankCoord coord_of(const Topology& topo, Rank rank) {
  return topo.coord_of(rank);
}

CommGroup local_comm(const Topology& topo, Rank rank) {
  return topo.comm(CommKind::local, rank);
}

CommGroup group_comm(const Topology& topo, Rank rank) {
  return topo.comm(CommKind::group, rank);
}

CommGroup node_peer_comm(const Topology& topo, Rank rank) {
  return topo.comm(CommKind::node_peer, rank);
}

CommGroup leader_group_comm(const Topology& topo, Rank rank) {
  return topo.comm(CommKind::leader_group, rank);
}

}  // namespace a2a
