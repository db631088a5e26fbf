#include <deque>
#include <map>
#include <random>
#include <variant>

#include <gtest/gtest.h>

#include "hl2ss/emulator.hpp"
#include "hl2ss/errors.hpp"
#include "hl2ss/mux.hpp"
#include "oracles.hpp"
#include "ports.hpp"

using namespace hl2ss;
using namespace hl2ss::mux;
using namespace std::chrono_literals;

namespace {

DataFrame frame_at(std::uint64_t ts, std::uint8_t tag = 0) { return DataFrame{Timestamp{ts}, Bytes{tag}, std::nullopt}; }

InterconnectOptions manual(std::size_t capacity, bool trace = false) {
    return InterconnectOptions{capacity, Scheduling::Manual, trace};
}

template <typename T>
T served(Interconnect& ic, std::future<T> fut) {
    ic.drain();
    EXPECT_EQ(fut.wait_for(0s), std::future_status::ready);
    return fut.get();
}

/// Sequential reference for the buffer: every pushed timestamp, and the
/// capacity that decides which ones are still held.
struct BufferModel {
    std::size_t capacity;
    std::vector<std::uint64_t> all;

    std::size_t oldest() const { return all.size() > capacity ? all.size() - capacity : 0; }
    std::vector<std::uint64_t> window() const { return {all.begin() + static_cast<std::ptrdiff_t>(oldest()), all.end()}; }

    std::optional<std::uint64_t> nearest_stamp(std::uint64_t t) const {
        const auto i = testsupport::nearest_index(window(), t);
        if (!i) return std::nullopt;
        return oldest() + *i;
    }
    std::optional<std::uint64_t> newest() const {
        if (all.empty()) return std::nullopt;
        return all.size() - 1;
    }
    LookupStatus status(std::uint64_t s) const {
        if (s >= all.size()) return LookupStatus::NotYet;
        return s < oldest() ? LookupStatus::Evicted : LookupStatus::Ok;
    }
};

}  // namespace

TEST(RingBuffer, NearestExamples) {
    RingBuffer b(10);
    EXPECT_FALSE(b.nearest(Timestamp{5}));
    for (std::uint64_t ts : {1000, 2000, 3000}) b.push(std::make_shared<const DataFrame>(frame_at(ts)));
    EXPECT_EQ(b.nearest(Timestamp{1600})->frame->timestamp.ticks, 2000u);
    EXPECT_EQ(b.nearest(Timestamp{1500})->frame->timestamp.ticks, 1000u);
    EXPECT_EQ(b.nearest(Timestamp{0})->stamp, 0u);
    EXPECT_EQ(b.nearest(Timestamp{99999})->stamp, 2u);
}

TEST(RingBuffer, StampsSurviveEviction) {
    RingBuffer b(10);
    for (std::uint64_t i = 0; i < 100; ++i) b.push(std::make_shared<const DataFrame>(frame_at(i * 10)));
    EXPECT_EQ(b.newest_stamp(), 99u);
    EXPECT_EQ(b.oldest_stamp(), 90u);
    EXPECT_EQ(b.at(50).status, LookupStatus::Evicted);
    EXPECT_EQ(b.at(99).status, LookupStatus::Ok);
    EXPECT_EQ(b.at(99).frame->timestamp.ticks, 990u);
    EXPECT_EQ(b.at(100).status, LookupStatus::NotYet);
    EXPECT_EQ(b.size(), 10u);
    EXPECT_EQ(b.total(), 100u);
    EXPECT_THROW(RingBuffer(0), ValidationError);
}

TEST(RingBuffer, MatchesBruteForce) {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 300; ++round) {
        const std::size_t cap = 1 + rng() % 20;
        const bool monotone = round % 2 == 0;
        RingBuffer b(cap);
        BufferModel m{cap, {}};
        const int n = static_cast<int>(rng() % 60);
        std::uint64_t ts = 0;
        for (int i = 0; i < n; ++i) {
            ts = monotone ? ts + rng() % 4 : rng() % 200;  // duplicates and ties are common
            b.push(std::make_shared<const DataFrame>(frame_at(ts)));
            m.all.push_back(ts);
        }
        for (int q = 0; q < 20; ++q) {
            const std::uint64_t t = rng() % 260;
            const auto got = b.nearest(Timestamp{t});
            const auto want = m.nearest_stamp(t);
            ASSERT_EQ(got.has_value(), want.has_value());
            if (got) {
                ASSERT_EQ(got->stamp, *want) << "t=" << t << " round=" << round;
                ASSERT_EQ(got->frame->timestamp.ticks, m.all[*want]);
            }
            const std::uint64_t s = rng() % (m.all.size() + 3);
            ASSERT_EQ(b.at(s).status, m.status(s));
        }
        ASSERT_EQ(b.newest_stamp(), m.newest());
    }
}

TEST(Interconnect, FrameStampAndMostRecent) {
    Interconnect ic(manual(10));
    Sink sink = ic.attach();
    EXPECT_EQ(sink.attach_stamp(), std::nullopt);
    EXPECT_EQ(served(ic, sink.submit_frame_stamp()), std::nullopt);
    EXPECT_EQ(served(ic, sink.submit_most_recent()).has_value(), false);
    for (int i = 0; i < 5; ++i) ic.push(frame_at(100 * i, static_cast<std::uint8_t>(i)));
    ic.drain();
    EXPECT_EQ(served(ic, sink.submit_frame_stamp()), 4u);
    const auto mr = served(ic, sink.submit_most_recent());
    ASSERT_TRUE(mr);
    EXPECT_EQ(mr->stamp, 4u);
    EXPECT_EQ(mr->frame->payload, Bytes{4});
    for (int i = 5; i < 100; ++i) ic.push(frame_at(100 * i));
    ic.drain();
    EXPECT_EQ(served(ic, sink.submit_frame_stamp()), 99u);
    EXPECT_EQ(served(ic, sink.submit_buffered(50)).status, LookupStatus::Evicted);
    EXPECT_EQ(served(ic, sink.submit_buffered(99)).status, LookupStatus::Ok);
    EXPECT_EQ(served(ic, sink.submit_buffered(100)).status, LookupStatus::NotYet);
}

TEST(Interconnect, AttachStampAfterSevenFrames) {
    Interconnect ic(manual(30));
    for (int i = 0; i < 7; ++i) ic.push(frame_at(i));
    ic.drain();
    Sink s = ic.attach();
    EXPECT_EQ(s.attach_stamp(), 6u);
    EXPECT_GE(s.channel(), kFirstSinkChannel);
}

TEST(Interconnect, NotificationCountsFrames) {
    Interconnect ic(manual(30));
    Sink s = ic.attach(true);
    Sink quiet = ic.attach(false);
    EXPECT_TRUE(s.has_notification());
    EXPECT_FALSE(s.wait_for_frame(0ms));
    for (int i = 0; i < 3; ++i) ic.push(frame_at(i));
    ic.drain();
    for (int i = 0; i < 3; ++i) EXPECT_TRUE(s.wait_for_frame(0ms));
    EXPECT_FALSE(s.wait_for_frame(0ms));
    EXPECT_THROW(quiet.wait_for_frame(0ms), UsageError);
}

TEST(Interconnect, StoppedRejectsEverything) {
    Interconnect ic(manual(5));
    Sink s = ic.attach();
    auto pending = s.submit_frame_stamp();
    ic.stop();
    EXPECT_FALSE(ic.running());
    EXPECT_THROW(pending.get(), UsageError);
    EXPECT_THROW(ic.attach(), UsageError);
    EXPECT_THROW(ic.push(frame_at(1)), UsageError);
    EXPECT_THROW(s.submit_most_recent(), UsageError);
}

TEST(Interconnect, DetachedSinkIsUnusable) {
    Interconnect ic(manual(5));
    Sink s = ic.attach();
    s.detach();
    EXPECT_FALSE(s.attached());
    EXPECT_THROW(s.get_most_recent_frame(), UsageError);
    Sink never;
    EXPECT_THROW(never.get_nearest(Timestamp{0}), UsageError);
    EXPECT_THROW(never.attach_stamp(), UsageError);
}

TEST(Interconnect, ManualBlockingQueryThrows) {
    Interconnect ic(manual(5));
    Sink s = ic.attach();
    EXPECT_THROW(s.get_frame_stamp(), UsageError);
}

TEST(Interconnect, ThreadedQueriesBlockUntilServed) {
    Interconnect ic(InterconnectOptions{20, Scheduling::Threaded, false});
    Sink s = ic.attach(true);
    for (int i = 0; i < 50; ++i) ic.push(frame_at(1000 + 10 * i));
    for (int i = 0; i < 50; ++i) ASSERT_TRUE(s.wait_for_frame(2000ms));
    EXPECT_EQ(s.get_frame_stamp(), 49u);
    EXPECT_EQ(s.get_nearest(Timestamp{1404})->frame->timestamp.ticks, 1400u);
    EXPECT_EQ(s.get_buffered_frame(10).status, LookupStatus::Evicted);
    EXPECT_THROW(ic.step(), UsageError);
}

TEST(Interconnect, SchedulingMatchesRoundRobinModel) {
    // Requests are submitted and served one at a time in random interleaving.
    // The model keeps its own queues and predicts, for every step, which
    // channel must be served and what the reply must be.
    std::mt19937_64 rng(99);
    const std::size_t cap = 8;
    Interconnect ic(manual(cap, true));
    constexpr int kSinks = 4;
    std::vector<Sink> sinks;
    for (int i = 0; i < kSinks; ++i) sinks.push_back(ic.attach(i % 2 == 0));

    using Fut = std::variant<std::monostate, std::future<std::optional<FrameStamp>>,
                             std::future<std::optional<StampedFrame>>, std::future<BufferedFrame>>;
    struct Op {
        int kind = 0;  // 0 push, 1 stamp, 2 nearest, 3 most recent, 4 buffered
        std::uint64_t arg = 0;
        Fut fut;
    };
    std::map<std::uint32_t, std::deque<Op>> queues;
    std::map<std::uint32_t, std::uint64_t> seq;
    std::uint32_t cursor = kControlChannel;
    BufferModel model{cap, {}};
    std::uint64_t next_ts = 0;
    const auto trace_base = ic.trace().size();
    std::vector<std::uint32_t> channels{kSourceChannel};
    for (auto& s : sinks) channels.push_back(s.channel());
    std::sort(channels.begin(), channels.end());

    int served_ops = 0;
    for (int event = 0; event < 10000; ++event) {
        const bool submit = rng() % 2 == 0;
        if (submit) {
            const std::size_t who = rng() % (kSinks + 1);
            Op op;
            if (who == kSinks) {
                op.kind = 0;
                next_ts += rng() % 3;
                op.arg = next_ts;
                ic.push(frame_at(next_ts));
                queues[kSourceChannel].push_back(std::move(op));
            } else {
                const Sink& s = sinks[who];
                op.kind = 1 + static_cast<int>(rng() % 4);
                op.arg = op.kind == 2 ? rng() % (next_ts + 5) : rng() % (model.all.size() + 20);
                switch (op.kind) {
                    case 1: op.fut = s.submit_frame_stamp(); break;
                    case 2: op.fut = s.submit_nearest(Timestamp{op.arg}); break;
                    case 3: op.fut = s.submit_most_recent(); break;
                    default: op.fut = s.submit_buffered(op.arg); break;
                }
                queues[s.channel()].push_back(std::move(op));
            }
            continue;
        }

        // Expected channel: first non-empty one after the cursor, cyclically.
        std::optional<std::uint32_t> expect;
        auto start = std::upper_bound(channels.begin(), channels.end(), cursor) - channels.begin();
        for (std::size_t n = 0; n < channels.size(); ++n) {
            const auto c = channels[(static_cast<std::size_t>(start) + n) % channels.size()];
            if (!queues[c].empty()) {
                expect = c;
                break;
            }
        }
        const bool did = ic.step();
        ASSERT_EQ(did, expect.has_value());
        if (!did) continue;
        ++served_ops;
        cursor = *expect;
        const auto trace = ic.trace();
        ASSERT_EQ(trace.size(), trace_base + static_cast<std::size_t>(served_ops));
        ASSERT_EQ(trace.back(), (TraceEntry{*expect, seq[*expect]++}));

        Op op = std::move(queues[*expect].front());
        queues[*expect].pop_front();
        switch (op.kind) {
            case 0: model.all.push_back(op.arg); break;
            case 1: ASSERT_EQ(std::get<1>(op.fut).get(), model.newest()); break;
            case 2: {
                const auto r = std::get<2>(op.fut).get();
                const auto want = model.nearest_stamp(op.arg);
                ASSERT_EQ(r.has_value(), want.has_value());
                if (r) {
                    ASSERT_EQ(r->stamp, *want);
                }
                break;
            }
            case 3: {
                const auto r = std::get<2>(op.fut).get();
                ASSERT_EQ(r.has_value(), !model.all.empty());
                if (r) {
                    ASSERT_EQ(r->stamp, *model.newest());
                }
                break;
            }
            default: {
                const auto r = std::get<3>(op.fut).get();
                ASSERT_EQ(r.status, model.status(op.arg));
                if (r.status == LookupStatus::Ok) {
                    ASSERT_EQ(r.frame->timestamp.ticks, model.all[op.arg]);
                }
            }
        }
    }
    EXPECT_GT(served_ops, 3000);
    // Notification sinks got one wakeup per frame.
    std::size_t wakeups = 0;
    while (sinks[0].wait_for_frame(0ms)) ++wakeups;
    EXPECT_EQ(wakeups, model.all.size());
}

TEST(MuxPipeline, SourceFeedsSinksFromEmulator) {
    EmulatorConfig cfg;
    cfg.port_offset = testsupport::next_port_offset();
    cfg.clock_multiplier = 10;
    auto emu = serve(cfg);
    ClientOptions opts;
    opts.port_offset = cfg.port_offset;

    Control control;
    control.start_stream("127.0.0.1", StreamPort::VLC_LEFTFRONT, default_config(StreamPort::VLC_LEFTFRONT), opts,
                         30 * 5);
    EXPECT_THROW(control.start_stream("127.0.0.1", StreamPort::VLC_LEFTFRONT,
                                      default_config(StreamPort::VLC_LEFTFRONT), opts, 10),
                 UsageError);
    Sink sink = control.attach(StreamPort::VLC_LEFTFRONT, true);
    for (int i = 0; i < 40; ++i) ASSERT_TRUE(sink.wait_for_frame(3000ms));
    const auto newest = sink.get_most_recent_frame();
    ASSERT_TRUE(newest);
    const auto near = sink.get_nearest(newest->frame->timestamp);
    ASSERT_TRUE(near);
    EXPECT_EQ(near->stamp, newest->stamp);
    EXPECT_GE(control.source(StreamPort::VLC_LEFTFRONT).frames_forwarded(), 40u);
    control.stop_stream(StreamPort::VLC_LEFTFRONT);
    EXPECT_THROW(control.interconnect(StreamPort::VLC_LEFTFRONT), UsageError);
}

TEST(MuxPipeline, SourceRecordsSessionError) {
    ClientOptions opts;
    opts.port_offset = 60000;
    Interconnect ic;
    Source src(ic, std::make_unique<RxSession>("127.0.0.1", StreamPort::IMU_ACCEL, ModeConfig{}, opts));
    EXPECT_THROW(src.start(), TransportError);
    EXPECT_FALSE(src.running());
}
