#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace a2a {

using Rank = int;

/// Coordinates of a rank in the node / aggregation-group hierarchy.
///
/// Ranks are laid out node-major with contiguous local ranks, and the
/// aggregation groups of a node are contiguous slices of its local ranks:
///   global_rank = node * ppn + local_rank
///   local_rank  = group_in_node * group_size + rank_in_group
struct RankCoord {
  Rank global_rank = 0;
  int node = 0;
  int local_rank = 0;
  int group_in_node = 0;
  int rank_in_group = 0;

  bool is_leader() const noexcept { return rank_in_group == 0; }
  friend bool operator==(const RankCoord&, const RankCoord&) = default;
};

/// Families of sub-communicators. Every family partitions the ranks that
/// participate in it; members of a group are always listed in ascending
/// global rank, which coincides with each family's construction order.
enum class CommKind {
  world,         // all p ranks
  local,         // one aggregation region (a whole node when group_size == ppn)
  group,         // equal rank_in_group across all regions, ordered by region
  node_peer,     // equal local_rank across nodes, ordered by node
  leader_group,  // leaders of one node, ordered by group_in_node
};

const char* to_string(CommKind kind);

/// A rank's position inside its group of some family.
struct Membership {
  int index = 0;  // position of the rank inside the group
  int size = 0;   // number of members of the group
};

/// Ordered member list of one sub-communicator.
struct CommGroup {
  std::vector<Rank> members;

  int size() const noexcept { return static_cast<int>(members.size()); }
  /// Index of `rank` in the group, or nullopt when it is not a member.
  std::optional<int> index_of(Rank rank) const;
  friend bool operator==(const CommGroup&, const CommGroup&) = default;
};

/// Simulated machine: `n_nodes` nodes of `ppn` ranks, each node split into
/// `ppn / group_size` aggregation regions with one leader apiece.
class Topology {
 public:
  /// Throws ConfigError unless all counts are >= 1 and group_size divides ppn.
  Topology(int n_nodes, int ppn, int group_size);
  /// One aggregation region per node.
  Topology(int n_nodes, int ppn) : Topology(n_nodes, ppn, ppn) {}

  int n_nodes() const noexcept { return n_nodes_; }
  int ppn() const noexcept { return ppn_; }
  int group_size() const noexcept { return group_size_; }
  int size() const noexcept { return n_nodes_ * ppn_; }
  int leaders_per_node() const noexcept { return ppn_ / group_size_; }
  int n_regions() const noexcept { return n_nodes_ * leaders_per_node(); }

  /// Same machine with a different aggregation granularity.
  Topology with_group_size(int group_size) const {
    return Topology(n_nodes_, ppn_, group_size);
  }

  RankCoord coord_of(Rank rank) const;
  Rank rank_of(int node, int local_rank) const { return node * ppn_ + local_rank; }

  int node_of(Rank rank) const noexcept { return rank / ppn_; }
  int region_of(Rank rank) const noexcept { return rank / group_size_; }
  bool is_leader(Rank rank) const noexcept { return rank % group_size_ == 0; }

  /// Position of `rank` in its group of `kind`, nullopt when the rank does
  /// not belong to that family (non-leaders in leader_group).
  std::optional<Membership> membership(CommKind kind, Rank rank) const;
  /// Member `index` of the group of `kind` that contains `anchor`.
  Rank member(CommKind kind, Rank anchor, int index) const;
  /// Full member list of the group of `kind` containing `rank`.
  CommGroup comm(CommKind kind, Rank rank) const;

  std::string describe() const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  void check_rank(Rank rank) const;

  int n_nodes_;
  int ppn_;
  int group_size_;
};

RankCoord coord_of(const Topology& topo, Rank rank);
/// Ranks of the aggregation region holding `rank` (the whole node when
/// group_size == ppn), ordered by local rank.
CommGroup local_comm(const Topology& topo, Rank rank);
/// Ranks sharing `rank`'s position within its region, across every region.
CommGroup group_comm(const Topology& topo, Rank rank);
/// Ranks with `rank`'s local rank on every node.
CommGroup node_peer_comm(const Topology& topo, Rank rank);
/// Leaders on the node of `rank`. Throws ConfigError for non-leaders.
CommGroup leader_group_comm(const Topology& topo, Rank rank);

}  // namespace a2a
