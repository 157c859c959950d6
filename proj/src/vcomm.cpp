#include "a2a/vcomm.hpp"

#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "a2a/error.hpp"

namespace a2a {

namespace {

struct Msg {
  Rank src;
  Rank dst;
  std::uint64_t bytes;

  std::uint64_t key(int p) const {
    return static_cast<std::uint64_t>(src) * static_cast<std::uint64_t>(p) +
           static_cast<std::uint64_t>(dst);
  }
};

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fingerprint(const Msg& m) {
  return mix64(mix64((static_cast<std::uint64_t>(m.src) << 32) ^
                     static_cast<std::uint64_t>(m.dst)) ^
               m.bytes);
}

using RankBuffers = std::vector<std::vector<std::byte>>;

class Engine {
 public:
  Engine(const Topology& topo, const Schedule& schedule, TraceSink& sink,
         bool payload)
      : topo_(topo), schedule_(schedule), sink_(sink), payload_(payload) {
    if (schedule.n_ranks() != topo.size()) {
      throw ConfigError(fmt::format(
          "schedule built for {} ranks, topology has {}", schedule.n_ranks(),
          topo.size()));
    }
  }

  void load(std::vector<BlockBuffer> inputs) {
    const auto p = static_cast<std::size_t>(topo_.size());
    if (inputs.size() != p) {
      throw ConfigError(fmt::format("expected {} input buffers, got {}", p,
                                    inputs.size()));
    }
    const std::size_t slots = 2 + static_cast<std::size_t>(schedule_.scratch_count());
    buffers_.assign(p, RankBuffers(slots));
    for (std::size_t r = 0; r < p; ++r) {
      const auto rank = static_cast<Rank>(r);
      const auto& in = inputs[r];
      if (in.n_blocks() != p || in.block_bytes() != schedule_.block_bytes()) {
        throw ConfigError(fmt::format(
            "input buffer of rank {} has {} blocks of {} bytes, expected {} "
            "of {}",
            r, in.n_blocks(), in.block_bytes(), p, schedule_.block_bytes()));
      }
      auto src = in.bytes();
      buffers_[r][0].assign(src.begin(), src.end());
      for (std::size_t slot = 1; slot < slots; ++slot) {
        buffers_[r][slot].assign(
            schedule_.buffer_bytes(BufferId{static_cast<std::uint8_t>(slot)}, rank),
            std::byte{0});
      }
    }
  }

  std::vector<BlockBuffer> outputs() {
    std::vector<BlockBuffer> out;
    const auto p = static_cast<std::size_t>(topo_.size());
    out.reserve(p);
    const std::size_t slot = schedule_.phases().empty() ? 0 : 1;
    for (std::size_t r = 0; r < p; ++r) {
      BlockBuffer buf(static_cast<Rank>(r), p, schedule_.block_bytes());
      std::ranges::copy(buffers_[r][slot], buf.bytes().begin());
      out.push_back(std::move(buf));
    }
    return out;
  }

  void run() {
    std::uint64_t step_base = 0;
    const auto phases = schedule_.phases();
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const Phase& phase = *phases[i];
      PhaseRecord header;
      header.tag = phase.tag();
      header.concurrent = phase.concurrent();
      header.first_step = step_base;
      header.step_count = phase.step_count();
      sink_.begin_phase(header);
      run_local(i, phase);
      for (std::size_t k = 0; k < phase.step_count(); ++k) {
        run_step(i, phase, k, step_base + k);
        sink_.end_step(step_base + k);
      }
      sink_.end_phase();
      step_base += phase.step_count();
    }
  }

 private:
  [[noreturn]] void fail(std::size_t phase_index, const Phase& phase,
                         std::uint64_t step, const std::string& what) const {
    throw ScheduleError(fmt::format("phase {} ({}) step {}: {}", phase_index,
                                    to_string(phase.tag()), step, what));
  }

  std::vector<std::byte>& buffer(Rank rank, BufferId id) {
    auto& slots = buffers_[static_cast<std::size_t>(rank)];
    if (id.index >= slots.size()) {
      throw ScheduleError(fmt::format("rank {} has no buffer slot {}", rank,
                                      static_cast<int>(id.index)));
    }
    return slots[id.index];
  }

  std::span<std::byte> region(Rank rank, BufferId id, std::uint64_t offset,
                              std::uint64_t length) {
    auto& buf = buffer(rank, id);
    if (offset > buf.size() || length > buf.size() - offset) {
      throw ScheduleError(fmt::format(
          "buffer overrun: rank {} range [{}, {}) exceeds buffer {} of {} "
          "bytes",
          rank, offset, offset + length, static_cast<int>(id.index),
          buf.size()));
    }
    return std::span<std::byte>(buf).subspan(offset, length);
  }

  void run_local(std::size_t phase_index, const Phase& phase) {
    for (Rank r = 0; r < topo_.size(); ++r) {
      const std::uint64_t bytes = phase.local_bytes(r);
      if (bytes == 0) continue;
      if (payload_) {
        moves_.clear();
        phase.local_moves(r, moves_);
        std::uint64_t total = 0;
        staging_.clear();
        for (const auto& mv : moves_) {
          auto from = region(r, mv.src, mv.src_offset, mv.length);
          staging_.insert(staging_.end(), from.begin(), from.end());
          total += mv.length;
        }
        if (total != bytes) {
          fail(phase_index, phase, 0,
               fmt::format("rank {} repack moves {} bytes, declared {}", r,
                           total, bytes));
        }
        std::size_t at = 0;
        for (const auto& mv : moves_) {
          auto to = region(r, mv.dst, mv.dst_offset, mv.length);
          std::memcpy(to.data(), staging_.data() + at, mv.length);
          at += mv.length;
        }
      }
      sink_.local_copy(r, bytes);
    }
  }

  // Collects each rank's posts for one step, validating per-rank rules.
  // Calls on_send for every send in (src, dst) order and on_recv for every
  // receive in (dst, src) order.
  template <class OnSend, class OnRecv>
  void collect(std::size_t phase_index, const Phase& phase, std::size_t step,
               std::uint64_t global_step, OnSend&& on_send, OnRecv&& on_recv) {
    auto by_peer = [](const Post& a, const Post& b) { return a.peer < b.peer; };
    for (Rank r = 0; r < topo_.size(); ++r) {
      sends_.clear();
      recvs_.clear();
      phase.posts(step, r, sends_, recvs_);
      std::ranges::sort(sends_, by_peer);
      std::ranges::sort(recvs_, by_peer);
      for (std::size_t i = 0; i < sends_.size(); ++i) {
        const auto& s = sends_[i];
        if (s.peer < 0 || s.peer >= topo_.size() || s.peer == r) {
          fail(phase_index, phase, global_step,
               fmt::format("rank {} posts a send to invalid peer {}", r, s.peer));
        }
        if (i > 0 && sends_[i - 1].peer == s.peer) {
          fail(phase_index, phase, global_step,
               fmt::format("rank {} posts two sends to rank {}", r, s.peer));
        }
        if (s.bytes == 0) {
          fail(phase_index, phase, global_step,
               fmt::format("rank {} posts an empty send to rank {}", r, s.peer));
        }
        on_send(Msg{r, s.peer, s.bytes});
      }
      for (std::size_t i = 0; i < recvs_.size(); ++i) {
        const auto& rv = recvs_[i];
        if (rv.peer < 0 || rv.peer >= topo_.size() || rv.peer == r) {
          fail(phase_index, phase, global_step,
               fmt::format("rank {} posts a receive from invalid peer {}", r,
                           rv.peer));
        }
        if (i > 0 && recvs_[i - 1].peer == rv.peer) {
          fail(phase_index, phase, global_step,
               fmt::format("rank {} posts two receives from rank {}", r,
                           rv.peer));
        }
        on_recv(Msg{rv.peer, r, rv.bytes});
      }
    }
  }

  // Pairs sends with receives; throws on the first unmatched post.
  void match(std::size_t phase_index, const Phase& phase,
             std::uint64_t global_step, const std::vector<Msg>& sends,
             std::vector<Msg>& recvs) {
    const int p = topo_.size();
    std::ranges::sort(recvs, [p](const Msg& a, const Msg& b) {
      return a.key(p) < b.key(p);
    });
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < sends.size() || j < recvs.size()) {
      if (j == recvs.size() ||
          (i < sends.size() && sends[i].key(p) < recvs[j].key(p))) {
        const auto& s = sends[i];
        fail(phase_index, phase, global_step,
             fmt::format("schedule deadlock: rank {} sends {} bytes to rank {} "
                         "which posts no matching receive",
                         s.src, s.bytes, s.dst));
      }
      if (i == sends.size() || recvs[j].key(p) < sends[i].key(p)) {
        const auto& rv = recvs[j];
        fail(phase_index, phase, global_step,
             fmt::format("schedule deadlock: rank {} waits for {} bytes from "
                         "rank {} which never sends them",
                         rv.dst, rv.bytes, rv.src));
      }
      if (sends[i].bytes != recvs[j].bytes) {
        fail(phase_index, phase, global_step,
             fmt::format("message size mismatch: rank {} sends {} bytes to "
                         "rank {} which expects {}",
                         sends[i].src, sends[i].bytes, sends[i].dst,
                         recvs[j].bytes));
      }
      ++i;
      ++j;
    }
  }

  TraceEvent event_of(const Phase& phase, std::uint64_t global_step,
                      const Msg& m) const {
    return TraceEvent{phase.tag(), global_step, m.src, m.dst, m.bytes,
                      classify_level(topo_, m.src, m.dst)};
  }

  void run_step(std::size_t phase_index, const Phase& phase, std::size_t step,
                std::uint64_t global_step) {
    if (!payload_) {
      trace_only_step(phase_index, phase, step, global_step);
      return;
    }
    step_sends_.clear();
    step_recvs_.clear();
    collect(
        phase_index, phase, step, global_step,
        [&](const Msg& m) { step_sends_.push_back(m); },
        [&](const Msg& m) { step_recvs_.push_back(m); });
    match(phase_index, phase, global_step, step_sends_, step_recvs_);

    // Read every send before writing any receive.
    staging_.clear();
    for (const auto& m : step_sends_) {
      segments_.clear();
      phase.send_segments(step, m.src, m.dst, segments_);
      std::uint64_t total = 0;
      for (const auto& seg : segments_) {
        auto from = region(m.src, seg.buffer, seg.offset, seg.length);
        staging_.insert(staging_.end(), from.begin(), from.end());
        total += seg.length;
      }
      if (total != m.bytes) {
        fail(phase_index, phase, global_step,
             fmt::format("rank {} send to {} covers {} bytes, posted {}",
                         m.src, m.dst, total, m.bytes));
      }
    }
    std::size_t at = 0;
    for (const auto& m : step_sends_) {
      segments_.clear();
      phase.recv_segments(step, m.dst, m.src, segments_);
      std::uint64_t total = 0;
      for (const auto& seg : segments_) total += seg.length;
      if (total != m.bytes) {
        fail(phase_index, phase, global_step,
             fmt::format("rank {} receive from {} covers {} bytes, posted {}",
                         m.dst, m.src, total, m.bytes));
      }
      for (const auto& seg : segments_) {
        auto to = region(m.dst, seg.buffer, seg.offset, seg.length);
        std::memcpy(to.data(), staging_.data() + at, seg.length);
        at += seg.length;
      }
      sink_.message(event_of(phase, global_step, m));
    }
  }

  // Matching by order-independent fingerprints keeps memory flat for steps
  // with millions of messages; a mismatch is re-run exactly to locate it.
  void trace_only_step(std::size_t phase_index, const Phase& phase,
                       std::size_t step, std::uint64_t global_step) {
    std::uint64_t send_count = 0;
    std::uint64_t recv_count = 0;
    std::uint64_t send_hash = 0;
    std::uint64_t recv_hash = 0;
    collect(
        phase_index, phase, step, global_step,
        [&](const Msg& m) {
          ++send_count;
          send_hash += fingerprint(m);
          sink_.message(event_of(phase, global_step, m));
        },
        [&](const Msg& m) {
          ++recv_count;
          recv_hash += fingerprint(m);
        });
    if (send_count == recv_count && send_hash == recv_hash) return;

    step_sends_.clear();
    step_recvs_.clear();
    collect(
        phase_index, phase, step, global_step,
        [&](const Msg& m) { step_sends_.push_back(m); },
        [&](const Msg& m) { step_recvs_.push_back(m); });
    match(phase_index, phase, global_step, step_sends_, step_recvs_);
    fail(phase_index, phase, global_step, "unmatched posts");
  }

  const Topology& topo_;
  const Schedule& schedule_;
  TraceSink& sink_;
  bool payload_;

  std::vector<RankBuffers> buffers_;
  std::vector<Post> sends_;
  std::vector<Post> recvs_;
  std::vector<Msg> step_sends_;
  std::vector<Msg> step_recvs_;
  std::vector<Segment> segments_;
  std::vector<Move> moves_;
  std::vector<std::byte> staging_;
};

}  // namespace

std::vector<BlockBuffer> run_schedule(const Topology& topo,
                                      const Schedule& schedule,
                                      std::vector<BlockBuffer> inputs,
                                      TraceSink& sink) {
  Engine engine(topo, schedule, sink, true);
  engine.load(std::move(inputs));
  engine.run();
  return engine.outputs();
}

RunResult run_schedule(const Topology& topo, const Schedule& schedule,
                       std::vector<BlockBuffer> inputs) {
  TraceRecorder recorder;
  RunResult result;
  result.outputs = run_schedule(topo, schedule, std::move(inputs), recorder);
  result.trace = recorder.take();
  return result;
}

void trace_schedule(const Topology& topo, const Schedule& schedule,
                    TraceSink& sink) {
  Engine engine(topo, schedule, sink, false);
  engine.run();
}

}  // namespace a2a
