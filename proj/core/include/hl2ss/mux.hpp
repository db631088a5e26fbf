#pragma once

// Stream multiplexer.
//
// A Source receives frames from one RxSession and forwards them to an
// Interconnect. The interconnect owns a bounded ring buffer and answers
// queries from any number of Sinks. Every role talks to the interconnect
// through its own message queue; the interconnect serves the queues in
// round-robin order and is the only code that touches the buffer.
//
//   hl2ss::mux::Control control;
//   control.start_stream("10.0.0.5", StreamPort::PV, cfg, {}, 30 * 5);
//   auto sink = control.attach(StreamPort::PV, /*with_notification=*/true);
//   sink.wait_for_frame();
//   auto latest = sink.get_most_recent_frame();

#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <thread>
#include <vector>

#include "hl2ss/client.hpp"
#include "hl2ss/wire.hpp"

namespace hl2ss::mux {

/// Global position of a frame in its stream; 0 is the first frame.
using FrameStamp = std::uint64_t;

struct StampedFrame {
    FrameStamp stamp = 0;
    std::shared_ptr<const DataFrame> frame;
};

enum class LookupStatus { Ok, Evicted, NotYet };

struct BufferedFrame {
    LookupStatus status = LookupStatus::NotYet;
    std::shared_ptr<const DataFrame> frame;  // set iff Ok
};

/// Bounded history of frames. Not thread safe; the interconnect owns one.
class RingBuffer {
public:
    explicit RingBuffer(std::size_t capacity);

    FrameStamp push(std::shared_ptr<const DataFrame> frame);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return frames_.size(); }
    bool empty() const noexcept { return frames_.empty(); }
    /// Frames pushed so far, including evicted ones.
    std::uint64_t total() const noexcept { return next_; }

    std::optional<FrameStamp> newest_stamp() const noexcept;
    std::optional<FrameStamp> oldest_stamp() const noexcept;

    std::optional<StampedFrame> most_recent() const;
    /// Minimizes |timestamp - t|; ties go to the earlier frame.
    std::optional<StampedFrame> nearest(Timestamp t) const;
    BufferedFrame at(FrameStamp s) const;

private:
    void recheck_sorted();

    std::size_t capacity_;
    std::deque<std::shared_ptr<const DataFrame>> frames_;
    FrameStamp next_ = 0;
    bool sorted_ = true;  // timestamps non-decreasing: binary search applies
};

enum class Scheduling {
    Threaded,  // a service thread runs until stop()
    Manual,    // the owner drives service with step()
};

struct InterconnectOptions {
    std::size_t capacity = 30 * 5;
    Scheduling scheduling = Scheduling::Threaded;
    /// Keeps a log of served messages (see trace()).
    bool record_trace = false;
};

/// Message queue ids. Sinks get ids from kFirstSinkChannel upwards.
inline constexpr std::uint32_t kSourceChannel = 0;
inline constexpr std::uint32_t kControlChannel = 1;
inline constexpr std::uint32_t kFirstSinkChannel = 2;

struct TraceEntry {
    std::uint32_t channel = 0;
    std::uint64_t sequence = 0;  // position within its channel, from 0
    bool operator==(const TraceEntry&) const = default;
};

class Sink;

class Interconnect {
public:
    explicit Interconnect(InterconnectOptions options = {});
    ~Interconnect();

    Interconnect(const Interconnect&) = delete;
    Interconnect& operator=(const Interconnect&) = delete;

    /// Queues a frame from the source. Throws UsageError once stopped.
    void push(DataFrame frame);

    /// Registers a sink. Blocks until the interconnect has served the
    /// request. Throws UsageError if it is stopped.
    Sink attach(bool with_notification = false);
    /// Non-blocking form for manual scheduling.
    std::future<Sink> submit_attach(bool with_notification = false);

    /// Serves one queued message. Manual scheduling only. Returns false if
    /// nothing was queued.
    bool step();
    /// Serves messages until the queues are empty; returns how many.
    std::size_t drain();

    /// Stops service. Pending and later requests fail with UsageError.
    void stop() noexcept;
    bool running() const noexcept;

    std::size_t capacity() const noexcept { return options_.capacity; }
    std::vector<TraceEntry> trace() const;

    struct Core;

private:
    InterconnectOptions options_;
    std::shared_ptr<Core> core_;
    std::thread worker_;
};

/// Query handle on an interconnect. Move-only; detaches on destruction.
class Sink {
public:
    Sink() = default;
    ~Sink();
    Sink(Sink&&) noexcept = default;
    Sink& operator=(Sink&&) noexcept;

    bool attached() const noexcept { return core_ != nullptr; }
    std::uint32_t channel() const noexcept { return channel_; }

    /// Newest stamp at the moment of attach; empty if no frame had arrived.
    std::optional<FrameStamp> attach_stamp() const;

    std::optional<FrameStamp> get_frame_stamp() const;
    std::optional<StampedFrame> get_nearest(Timestamp t) const;
    std::optional<StampedFrame> get_most_recent_frame() const;
    BufferedFrame get_buffered_frame(FrameStamp s) const;

    // Asynchronous forms; the reply is ready once the interconnect has
    // served the request.
    std::future<std::optional<FrameStamp>> submit_frame_stamp() const;
    std::future<std::optional<StampedFrame>> submit_nearest(Timestamp t) const;
    std::future<std::optional<StampedFrame>> submit_most_recent() const;
    std::future<BufferedFrame> submit_buffered(FrameStamp s) const;

    bool has_notification() const noexcept { return wakeups_ != nullptr; }
    /// Blocks until a frame buffered after attach has not yet been
    /// consumed, then consumes one wakeup.
    void wait_for_frame() const;
    bool wait_for_frame(std::chrono::milliseconds timeout) const;

    void detach() noexcept;

private:
    friend class Interconnect;
    friend struct Interconnect::Core;

    void require_attached() const;

    std::shared_ptr<Interconnect::Core> core_;
    std::uint32_t channel_ = 0;
    std::optional<FrameStamp> attach_stamp_;
    std::shared_ptr<std::counting_semaphore<>> wakeups_;
};

/// Pumps frames from a receiver into an interconnect on its own thread.
class Source {
public:
    Source(Interconnect& target, std::unique_ptr<RxSession> rx);
    ~Source();

    Source(const Source&) = delete;
    Source& operator=(const Source&) = delete;

    /// Opens the session (errors surface here) and starts forwarding.
    void start();
    void stop() noexcept;

    bool running() const noexcept { return running_.load(); }
    std::uint64_t frames_forwarded() const noexcept { return forwarded_.load(); }
    /// Message of the error that ended the session, if any.
    std::optional<std::string> last_error() const;

private:
    Interconnect& target_;
    std::unique_ptr<RxSession> rx_;
    std::thread worker_;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> forwarded_{0};
    mutable std::mutex mu_;
    std::optional<std::string> error_;
};

/// Creates, attaches and terminates the other roles, one pipeline per
/// stream port.
class Control {
public:
    Control() = default;
    ~Control();

    Interconnect& start_stream(const std::string& host, StreamPort port, const StreamConfig& config,
                               const ClientOptions& options, std::size_t capacity);
    Sink attach(StreamPort port, bool with_notification = false);
    Interconnect& interconnect(StreamPort port);
    Source& source(StreamPort port);

    void stop_stream(StreamPort port) noexcept;
    void stop_all() noexcept;

private:
    struct Pipeline {
        std::unique_ptr<Interconnect> interconnect;
        std::unique_ptr<Source> source;
    };
    std::map<StreamPort, Pipeline> pipelines_;
};

}  // namespace hl2ss::mux
