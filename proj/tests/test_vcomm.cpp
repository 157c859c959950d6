#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "a2a/algorithms.hpp"
#include "a2a/buffer.hpp"
#include "a2a/error.hpp"
#include "a2a/trace.hpp"
#include "a2a/vcomm.hpp"

using namespace a2a;

namespace {

// Straightforward FNV-1a over the 24-byte little-endian key, written
// independently of the library for cross-checking.
std::uint64_t reference_fnv(std::uint64_t src, std::uint64_t dst, std::uint64_t j) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint64_t word : {src, dst, j}) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

// A phase given as an explicit message list per step.
struct ScriptedMsg {
  Rank src;
  Rank dst;
  std::uint64_t src_offset;
  std::uint64_t dst_offset;
  std::uint64_t length;
  std::uint64_t recv_length = 0;  // 0: same as length
  bool posted_recv = true;
};

class ScriptedPhase final : public Phase {
 public:
  explicit ScriptedPhase(std::vector<std::vector<ScriptedMsg>> steps)
      : Phase(PhaseTag::direct, false), steps_(std::move(steps)) {}

  std::size_t step_count() const override { return steps_.size(); }
  void posts(std::size_t step, Rank rank, std::vector<Post>& sends,
             std::vector<Post>& recvs) const override {
    for (const auto& m : steps_[step]) {
      if (m.src == rank) sends.push_back({m.dst, m.length});
      if (m.dst == rank && m.posted_recv) {
        recvs.push_back({m.src, m.recv_length ? m.recv_length : m.length});
      }
    }
  }
  void send_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override {
    for (const auto& m : steps_[step]) {
      if (m.src == rank && m.dst == peer) out.push_back({kSendBuffer, m.src_offset, m.length});
    }
  }
  void recv_segments(std::size_t step, Rank rank, Rank peer,
                     std::vector<Segment>& out) const override {
    for (const auto& m : steps_[step]) {
      if (m.src == peer && m.dst == rank) out.push_back({kRecvBuffer, m.dst_offset, m.length});
    }
  }

 private:
  std::vector<std::vector<ScriptedMsg>> steps_;
};

Schedule scripted(int p, std::uint64_t s, std::vector<std::vector<ScriptedMsg>> steps) {
  Schedule sched(p, s);
  sched.add(std::make_shared<ScriptedPhase>(std::move(steps)));
  return sched;
}

}  // namespace

// ---------------------------------------------------------------------------
// Payload

TEST(Payload, FrozenFnvValues) {
  EXPECT_EQ(payload_hash(0, 0, 0), 0x81d23fd7003c2305ull);
  EXPECT_EQ(payload_hash(0, 1, 0), 0x32d42a0eed270ac4ull);
  EXPECT_EQ(payload_hash(1, 0, 0), 0x5b2a969b42d238a4ull);
  EXPECT_EQ(payload_hash(5, 3, 7), 0xcc80fa0d91592204ull);
  EXPECT_EQ(payload_hash(3583, 0, 4095), 0x0ee2a69951f2c6a7ull);
  EXPECT_EQ(payload_hash(17, 42, 1000), 0xdcb13ab6e60e719bull);

  EXPECT_EQ(payload_byte(0, 0, 0), std::byte{5});
  EXPECT_EQ(payload_byte(0, 1, 0), std::byte{196});
  EXPECT_EQ(payload_byte(1, 0, 0), std::byte{164});
  EXPECT_EQ(payload_byte(5, 3, 7), std::byte{4});
  EXPECT_EQ(payload_byte(3583, 0, 4095), std::byte{167});
  EXPECT_EQ(payload_byte(17, 42, 1000), std::byte{155});
}

TEST(Payload, MatchesReferenceFnv) {
  for (std::uint64_t src = 0; src < 9; ++src) {
    for (std::uint64_t dst = 0; dst < 9; ++dst) {
      for (std::uint64_t j : {0ull, 1ull, 255ull, 256ull, 65537ull}) {
        ASSERT_EQ(payload_hash(src, dst, j), reference_fnv(src, dst, j));
      }
    }
  }
}

TEST(Payload, SeedIsDeterministicAndPositioned) {
  Topology t(2, 3, 3);
  const auto a = seed_payload(t, 5);
  const auto b = seed_payload(t, 5);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 6u);
  for (Rank src = 0; src < 6; ++src) {
    EXPECT_EQ(a[static_cast<std::size_t>(src)].owner(), src);
    for (Rank dst = 0; dst < 6; ++dst) {
      const auto blk = a[static_cast<std::size_t>(src)].block(static_cast<std::size_t>(dst));
      for (std::size_t j = 0; j < 5; ++j) {
        ASSERT_EQ(blk[j], static_cast<std::byte>(reference_fnv(src, dst, j) & 0xff));
      }
    }
  }
}

TEST(Payload, PaperScaleBufferSize) {
  BlockBuffer buf(0, 3584, 4096);
  EXPECT_EQ(buf.bytes().size(), 14680064u);
  EXPECT_EQ(buf.n_blocks(), 3584u);
  EXPECT_THROW(buf.block(3584), std::out_of_range);
}

TEST(Payload, ZeroBlockBytesRejected) {
  EXPECT_THROW(BlockBuffer(0, 4, 0), ConfigError);
}

TEST(Oracle, SingleRankIsIdentity) {
  Topology t(1, 1);
  const auto in = seed_payload(t, 8);
  EXPECT_EQ(oracle_transpose(t, in), in);
}

TEST(Oracle, TwoRanksSwapCrossBlocks) {
  Topology t(1, 2);
  std::vector<BlockBuffer> in{BlockBuffer(0, 2, 1), BlockBuffer(1, 2, 1)};
  in[0].block(0)[0] = std::byte{10};
  in[0].block(1)[0] = std::byte{11};
  in[1].block(0)[0] = std::byte{20};
  in[1].block(1)[0] = std::byte{21};
  const auto out = oracle_transpose(t, in);
  EXPECT_EQ(out[0].block(0)[0], std::byte{10});
  EXPECT_EQ(out[0].block(1)[0], std::byte{20});
  EXPECT_EQ(out[1].block(0)[0], std::byte{11});
  EXPECT_EQ(out[1].block(1)[0], std::byte{21});
}

TEST(Oracle, SeededOutputCarriesSourceTags) {
  Topology t(3, 2, 1);
  const auto out = oracle_transpose(t, seed_payload(t, 3));
  for (Rank r = 0; r < t.size(); ++r) {
    for (Rank i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        ASSERT_EQ(out[static_cast<std::size_t>(r)].block(static_cast<std::size_t>(i))[j],
                  payload_byte(i, r, j));
      }
    }
  }
}

TEST(Oracle, FirstMismatchLocatesByte) {
  Topology t(1, 3);
  const auto a = seed_payload(t, 4);
  auto b = a;
  EXPECT_FALSE(first_mismatch(a, b).has_value());
  b[2].block(1)[3] ^= std::byte{1};
  b[2].block(2)[0] ^= std::byte{1};
  const auto m = first_mismatch(b, a);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->rank, 2);
  EXPECT_EQ(m->block, 1u);
  EXPECT_EQ(m->byte, 3u);
}

// ---------------------------------------------------------------------------
// Levels

TEST(Levels, Examples) {
  Topology t(2, 4, 2);
  EXPECT_EQ(classify_level(t, 0, 1), Level::l0);
  EXPECT_EQ(classify_level(t, 0, 2), Level::l1);
  EXPECT_EQ(classify_level(t, 0, 4), Level::l2);
  EXPECT_THROW(classify_level(t, 3, 3), ConfigError);
  EXPECT_THROW(classify_level(t, 0, 8), ConfigError);
}

TEST(Levels, FollowCoordinates) {
  for (int g : {1, 2, 3, 6}) {
    Topology t(3, 6, g);
    for (Rank a = 0; a < t.size(); ++a) {
      for (Rank b = 0; b < t.size(); ++b) {
        if (a == b) continue;
        const auto ca = t.coord_of(a);
        const auto cb = t.coord_of(b);
        Level want = Level::l2;
        if (ca.node == cb.node) {
          want = ca.group_in_node == cb.group_in_node ? Level::l0 : Level::l1;
        }
        ASSERT_EQ(classify_level(t, a, b), want);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Engine

TEST(Engine, EmptyScheduleIsIdentity) {
  Topology t(2, 2);
  const auto in = seed_payload(t, 3);
  const auto result = run_schedule(t, Schedule(4, 3), in);
  EXPECT_EQ(result.outputs, in);
  EXPECT_TRUE(result.trace.events.empty());
  EXPECT_TRUE(result.trace.phases.empty());
}

TEST(Engine, OneMessageMovesBytesVerbatim) {
  for (int g : {1, 2}) {
    Topology t(1, 2, g);
    const auto in = seed_payload(t, 8);
    const auto result = run_schedule(t, scripted(2, 8, {{{0, 1, 0, 8, 8}}}), in);
    ASSERT_EQ(result.trace.events.size(), 1u);
    const auto& e = result.trace.events[0];
    EXPECT_EQ(e.src, 0);
    EXPECT_EQ(e.dst, 1);
    EXPECT_EQ(e.bytes, 8u);
    EXPECT_EQ(e.step, 0u);
    EXPECT_EQ(e.level, g == 2 ? Level::l0 : Level::l1);
    const auto got = result.outputs[1].bytes().subspan(8, 8);
    const auto sent = in[0].bytes().subspan(0, 8);
    EXPECT_TRUE(std::ranges::equal(got, sent));
  }
}

TEST(Engine, SendsReadBeforeReceivesWrite) {
  // Swap within one step through the same recv offsets: each side must see
  // the other's original bytes.
  Topology t(1, 2);
  const auto in = seed_payload(t, 2);
  const auto result =
      run_schedule(t, scripted(2, 2, {{{0, 1, 0, 0, 4}, {1, 0, 0, 0, 4}}}), in);
  EXPECT_TRUE(std::ranges::equal(result.outputs[1].bytes(), in[0].bytes()));
  EXPECT_TRUE(std::ranges::equal(result.outputs[0].bytes(), in[1].bytes()));
}

TEST(Engine, UnmatchedSendIsDeadlock) {
  Topology t(1, 2);
  ScriptedMsg m{0, 1, 0, 0, 2};
  m.posted_recv = false;
  try {
    run_schedule(t, scripted(2, 2, {{m}}), seed_payload(t, 2));
    FAIL() << "expected ScheduleError";
  } catch (const ScheduleError& e) {
    EXPECT_NE(std::string(e.what()).find("schedule deadlock"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
  }
}

TEST(Engine, SizeMismatchRejected) {
  Topology t(1, 2);
  ScriptedMsg m{0, 1, 0, 0, 2};
  m.recv_length = 3;
  EXPECT_THROW(run_schedule(t, scripted(2, 2, {{m}}), seed_payload(t, 2)),
               ScheduleError);
}

TEST(Engine, OverrunRejected) {
  Topology t(1, 2);
  EXPECT_THROW(run_schedule(t, scripted(2, 2, {{{0, 1, 2, 0, 4}}}), seed_payload(t, 2)),
               ScheduleError);
}

TEST(Engine, TraceOnlyDetectsDeadlock) {
  Topology t(1, 2);
  ScriptedMsg m{0, 1, 0, 0, 2};
  m.posted_recv = false;
  TraceRecorder sink;
  EXPECT_THROW(trace_schedule(t, scripted(2, 2, {{m}}), sink), ScheduleError);
}

TEST(Engine, PairwiseDirectFourRanks) {
  Topology t(1, 4);
  const auto result =
      run_schedule(t, build_direct(t, 2, ExchangeImpl::pairwise), seed_payload(t, 2));
  EXPECT_EQ(result.trace.message_steps(), 3u);
  std::map<std::uint64_t, std::vector<TraceEvent>> by_step;
  for (const auto& e : result.trace.events) by_step[e.step].push_back(e);
  ASSERT_EQ(by_step.size(), 3u);
  for (auto& [step, events] : by_step) {
    std::set<Rank> senders, receivers;
    for (const auto& e : events) {
      EXPECT_TRUE(senders.insert(e.src).second);
      EXPECT_TRUE(receivers.insert(e.dst).second);
    }
    EXPECT_EQ(senders.size(), 4u);
    EXPECT_EQ(receivers.size(), 4u);
  }
  std::set<std::pair<Rank, Rank>> first;
  for (const auto& e : by_step.begin()->second) first.emplace(e.src, e.dst);
  EXPECT_EQ(first, (std::set<std::pair<Rank, Rank>>{{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
}

TEST(Engine, DeterministicAndConserving) {
  Topology t(2, 4, 2);
  const auto sched = build_node_aware(t, 3, ExchangeImpl::pairwise);
  const auto a = run_schedule(t, sched, seed_payload(t, 3));
  const auto b = run_schedule(t, sched, seed_payload(t, 3));
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_EQ(a.trace.events, b.trace.events);

  // Byte conservation: what each step sends is what it receives, and
  // level counts partition the events.
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> per_step;
  std::map<Rank, std::uint64_t> sent, received;
  for (const auto& e : a.trace.events) {
    per_step[e.step].first += e.bytes;
    sent[e.src] += e.bytes;
    received[e.dst] += e.bytes;
  }
  std::uint64_t total_sent = 0, total_received = 0;
  for (auto& [r, v] : sent) total_sent += v;
  for (auto& [r, v] : received) total_received += v;
  EXPECT_EQ(total_sent, total_received);
  const auto summary = summarize(a.trace);
  EXPECT_EQ(summary.total_messages(), a.trace.events.size());
  EXPECT_EQ(summary.total_bytes(), total_sent);
}

TEST(Engine, TraceOnlyMatchesPayloadRun) {
  Topology t(3, 4, 2);
  for (auto kind : kAllAlgorithms) {
    const auto sched = build_schedule(t, {kind, ExchangeImpl::nonblocking, 2}, 5);
    const auto full = run_schedule(t, sched, seed_payload(t, 5));
    TraceRecorder rec;
    trace_schedule(t, sched, rec);
    const Trace lean = rec.take();
    EXPECT_EQ(lean.events, full.trace.events) << to_string(kind);
    ASSERT_EQ(lean.phases.size(), full.trace.phases.size());
    for (std::size_t i = 0; i < lean.phases.size(); ++i) {
      EXPECT_EQ(lean.phases[i].copies, full.trace.phases[i].copies);
    }
  }
}

TEST(Engine, RejectsWrongInputs) {
  Topology t(1, 3);
  Schedule sched(3, 2);
  EXPECT_THROW(run_schedule(t, sched, seed_payload(t, 4)), ConfigError);
  EXPECT_THROW(run_schedule(Topology(1, 2), sched, seed_payload(Topology(1, 2), 2)),
               ConfigError);
}

// ---------------------------------------------------------------------------
// Trace utilities

TEST(Trace, ReplayReproducesTrace) {
  Topology t(2, 4, 2);
  const auto run = run_schedule(t, build_multileader_node_aware(t, 2, ExchangeImpl::pairwise),
                                seed_payload(t, 2));
  TraceRecorder rec;
  replay(run.trace, rec);
  const Trace again = rec.take();
  EXPECT_EQ(again.events, run.trace.events);
  ASSERT_EQ(again.phases.size(), run.trace.phases.size());
  for (std::size_t i = 0; i < again.phases.size(); ++i) {
    EXPECT_EQ(again.phases[i].tag, run.trace.phases[i].tag);
    EXPECT_EQ(again.phases[i].first_step, run.trace.phases[i].first_step);
    EXPECT_EQ(again.phases[i].event_count, run.trace.phases[i].event_count);
    EXPECT_EQ(again.phases[i].copies, run.trace.phases[i].copies);
  }
}

TEST(Trace, CsvDump) {
  Topology t(1, 2);
  const auto run = run_schedule(t, build_direct(t, 4, ExchangeImpl::pairwise),
                                seed_payload(t, 4));
  std::ostringstream out;
  write_trace_csv(out, run.trace);
  EXPECT_EQ(out.str(), "phase,step,src,dst,bytes,level\ndirect,0,0,1,4,L0\ndirect,0,1,0,4,L0\n");
}

TEST(Trace, EmptyPhasesIgnoredByEquivalence) {
  Trace a;
  a.events.push_back({PhaseTag::direct, 3, 0, 1, 8, Level::l2});
  a.phases.push_back({PhaseTag::repack, false, 0, 0, 0, 0, {}});
  a.phases.push_back({PhaseTag::gather, false, 0, 3, 0, 0, {}});
  a.phases.push_back({PhaseTag::direct, false, 3, 1, 0, 1, {}});
  Trace b;
  b.events.push_back({PhaseTag::inter_alltoall, 0, 0, 1, 8, Level::l2});
  b.phases.push_back({PhaseTag::inter_alltoall, false, 0, 1, 0, 1, {}});
  EXPECT_TRUE(equivalent_modulo_empty_phases(a, b));
  b.events[0].bytes = 9;
  EXPECT_FALSE(equivalent_modulo_empty_phases(a, b));
}
