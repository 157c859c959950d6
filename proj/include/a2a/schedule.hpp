#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "a2a/topology.hpp"

namespace a2a {

/// What a phase does; also the label it carries in traces and breakdowns.
enum class PhaseTag : std::uint8_t {
  gather,
  scatter,
  inter_alltoall,
  intra_alltoall,
  leader_alltoall,
  direct,
  bruck_step,
  repack,
};

std::string_view to_string(PhaseTag tag);
std::optional<PhaseTag> parse_phase_tag(std::string_view text);

/// How an exchange lays out its messages over steps.
enum class ExchangeImpl : std::uint8_t {
  pairwise,     // m-1 steps, one send and one receive per rank per step
  nonblocking,  // every message of the exchange posted in one step
};

std::string_view to_string(ExchangeImpl impl);
std::optional<ExchangeImpl> parse_exchange_impl(std::string_view text);

/// Per-rank buffer slot. Slot 0 holds the input, slot 1 the output; further
/// slots are algorithm scratch space.
struct BufferId {
  std::uint8_t index = 0;
  friend bool operator==(BufferId, BufferId) = default;
};

inline constexpr BufferId kSendBuffer{0};
inline constexpr BufferId kRecvBuffer{1};
inline constexpr BufferId scratch_buffer(int n) {
  return BufferId{static_cast<std::uint8_t>(2 + n)};
}

/// A byte range inside one of a rank's buffers.
struct Segment {
  BufferId buffer;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

/// Rank-local copy performed by a repack.
struct Move {
  BufferId src;
  std::uint64_t src_offset = 0;
  BufferId dst;
  std::uint64_t dst_offset = 0;
  std::uint64_t length = 0;
};

/// One posted send or receive: peer rank and byte count.
struct Post {
  Rank peer = 0;
  std::uint64_t bytes = 0;
};

/// A unit of an algorithm: either communication steps (every rank posts
/// sends and receives that must match within the step) or a rank-local
/// repack. Phases are immutable and describe each rank's work lazily so
/// that schedules for thousands of ranks never materialise every message.
class Phase {
 public:
  Phase(PhaseTag tag, bool concurrent) : tag_(tag), concurrent_(concurrent) {}
  virtual ~Phase() = default;

  PhaseTag tag() const noexcept { return tag_; }
  /// True when all messages are posted at once (nonblocking exchanges).
  bool concurrent() const noexcept { return concurrent_; }

  virtual std::size_t step_count() const { return 0; }
  /// Sends and receives `rank` posts in `step`. Appends to the vectors.
  virtual void posts(std::size_t step, Rank rank, std::vector<Post>& sends,
                     std::vector<Post>& recvs) const;
  /// Source bytes of the message `rank` sends to `peer` in `step`.
  virtual void send_segments(std::size_t step, Rank rank, Rank peer,
                             std::vector<Segment>& out) const;
  /// Destination bytes of the message `rank` receives from `peer`.
  virtual void recv_segments(std::size_t step, Rank rank, Rank peer,
                             std::vector<Segment>& out) const;

  /// Bytes copied locally by `rank`.
  virtual std::uint64_t local_bytes(Rank rank) const;
  virtual void local_moves(Rank rank, std::vector<Move>& out) const;

  bool has_work(int n_ranks) const;

 private:
  PhaseTag tag_;
  bool concurrent_;
};

using PhasePtr = std::shared_ptr<const Phase>;

/// All-to-all over every group of a comm family: member i sends bytes
/// [j*chunk, (j+1)*chunk) of `src` to member j, which stores them at
/// [i*chunk, (i+1)*chunk) of `dst`. The diagonal chunk is not moved; the
/// preceding repack places it.
class ExchangePhase final : public Phase {
 public:
  struct Config {
    CommKind family = CommKind::world;
    bool leaders_only = false;
    std::uint64_t chunk = 0;
    BufferId src = kSendBuffer;
    BufferId dst = kRecvBuffer;
    ExchangeImpl impl = ExchangeImpl::pairwise;
  };

  ExchangePhase(PhaseTag tag, const Topology& topo, Config config);

  std::size_t step_count() const override;
  void posts(std::size_t step, Rank rank, std::vector<Post>& sends,
             std::vector<Post>& recvs) const override;
  void send_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override;
  void recv_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override;

  /// Size of every group in the family.
  int comm_size() const noexcept { return comm_size_; }
  const Config& config() const noexcept { return config_; }

 private:
  std::optional<Membership> participant(Rank rank) const;

  Topology topo_;
  Config config_;
  int comm_size_;
};

/// Gather to (or scatter from) member 0 of every local comm. Each non-root
/// member moves `chunk` bytes; the root's own chunk stays put.
class RootedPhase final : public Phase {
 public:
  enum class Direction { gather, scatter };
  struct Config {
    Direction direction = Direction::gather;
    std::uint64_t chunk = 0;
    BufferId src = kSendBuffer;
    BufferId dst = kRecvBuffer;
    ExchangeImpl impl = ExchangeImpl::pairwise;
  };

  RootedPhase(const Topology& topo, Config config);

  std::size_t step_count() const override;
  void posts(std::size_t step, Rank rank, std::vector<Post>& sends,
             std::vector<Post>& recvs) const override;
  void send_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override;
  void recv_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override;

 private:
  Topology topo_;
  Config config_;
};

/// Radix-2 Bruck exchange over all ranks on one rotated buffer: in step k
/// rank r sends every block whose index has bit k set to r + 2^k and
/// receives the same indices from r - 2^k.
class BruckPhase final : public Phase {
 public:
  BruckPhase(int n_ranks, std::uint64_t block_bytes, BufferId buffer);

  std::size_t step_count() const override;
  void posts(std::size_t step, Rank rank, std::vector<Post>& sends,
             std::vector<Post>& recvs) const override;
  void send_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override;
  void recv_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override;

  /// Number of block indices in [0, n_ranks) with bit `step` set.
  std::uint64_t blocks_in_step(std::size_t step) const;

 private:
  void index_segments(std::size_t step, std::vector<Segment>& out) const;

  int n_ranks_;
  std::uint64_t block_bytes_;
  BufferId buffer_;
};

/// Rank-local permutation of buffer bytes.
class RepackPhase final : public Phase {
 public:
  using Generator = std::function<void(Rank, std::vector<Move>&)>;
  using Volume = std::function<std::uint64_t(Rank)>;

  RepackPhase(Generator generator, Volume volume);

  std::uint64_t local_bytes(Rank rank) const override;
  void local_moves(Rank rank, std::vector<Move>& out) const override;

 private:
  Generator generator_;
  Volume volume_;
};

/// An algorithm as an ordered list of phases plus the per-rank scratch
/// buffers it needs. Input and output buffers are n_ranks * block_bytes.
class Schedule {
 public:
  Schedule(int n_ranks, std::uint64_t block_bytes);

  int n_ranks() const noexcept { return n_ranks_; }
  std::uint64_t block_bytes() const noexcept { return block_bytes_; }

  /// Appends the phase unless it has no steps and copies no bytes.
  void add(PhasePtr phase);
  std::span<const PhasePtr> phases() const noexcept { return phases_; }

  /// Size of scratch buffer `n` on each rank.
  void set_scratch(int n, std::vector<std::uint64_t> bytes_per_rank);
  int scratch_count() const noexcept {
    return static_cast<int>(scratch_.size());
  }
  std::uint64_t buffer_bytes(BufferId id, Rank rank) const;

  /// Sum of step counts over all phases.
  std::size_t message_steps() const;

  /// Replaces phase `index`. Used for fault injection in tests.
  void replace(std::size_t index, PhasePtr phase);

 private:
  int n_ranks_;
  std::uint64_t block_bytes_;
  std::vector<PhasePtr> phases_;
  std::vector<std::vector<std::uint64_t>> scratch_;
};

/// Copy of `schedule` whose `ordinal`-th repack phase (0-based, counting
/// repacks only) reads every block from the next block's source:
/// an off-by-one in the permutation. Throws ConfigError if there is no such
/// repack.
Schedule corrupt_repack(const Schedule& schedule, std::size_t ordinal);

/// Number of repack phases in `schedule`.
std::size_t repack_count(const Schedule& schedule);

}  // namespace a2a
