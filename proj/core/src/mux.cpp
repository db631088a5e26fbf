#include "hl2ss/mux.hpp"

#include <algorithm>
#include <variant>

#include "hl2ss/errors.hpp"

namespace hl2ss::mux {

// ---------------------------------------------------------------------------
// RingBuffer

RingBuffer::RingBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("ring buffer capacity must be at least one frame");
}

FrameStamp RingBuffer::push(std::shared_ptr<const DataFrame> frame) {
    if (!frames_.empty() && frame->timestamp < frames_.back()->timestamp) sorted_ = false;
    frames_.push_back(std::move(frame));
    if (frames_.size() > capacity_) {
        frames_.pop_front();
        // an out-of-order frame may just have left the window
        if (!sorted_) recheck_sorted();
    }
    return next_++;
}

void RingBuffer::recheck_sorted() {
    sorted_ = std::is_sorted(frames_.begin(), frames_.end(),
                             [](const auto& a, const auto& b) { return a->timestamp < b->timestamp; });
}

std::optional<FrameStamp> RingBuffer::newest_stamp() const noexcept {
    if (frames_.empty()) return std::nullopt;
    return next_ - 1;
}

std::optional<FrameStamp> RingBuffer::oldest_stamp() const noexcept {
    if (frames_.empty()) return std::nullopt;
    return next_ - frames_.size();
}

std::optional<StampedFrame> RingBuffer::most_recent() const {
    if (frames_.empty()) return std::nullopt;
    return StampedFrame{next_ - 1, frames_.back()};
}

std::optional<StampedFrame> RingBuffer::nearest(Timestamp t) const {
    if (frames_.empty()) return std::nullopt;
    auto distance = [t](const auto& f) {
        return f->timestamp.ticks > t.ticks ? f->timestamp.ticks - t.ticks : t.ticks - f->timestamp.ticks;
    };
    std::size_t best = 0;
    if (sorted_) {
        auto less_ts = [](const auto& f, Timestamp x) { return f->timestamp < x; };
        const auto hi = std::lower_bound(frames_.begin(), frames_.end(), t, less_ts);
        if (hi == frames_.end()) {
            // Everything is older; the earliest copy of the newest timestamp.
            best = static_cast<std::size_t>(
                std::lower_bound(frames_.begin(), frames_.end(), frames_.back()->timestamp, less_ts) -
                frames_.begin());
        } else if (hi == frames_.begin()) {
            best = 0;
        } else {
            const auto lo = std::lower_bound(frames_.begin(), hi, (*(hi - 1))->timestamp, less_ts);
            best = static_cast<std::size_t>((distance(*lo) <= distance(*hi) ? lo : hi) - frames_.begin());
        }
    } else {
        std::uint64_t best_d = distance(frames_[0]);
        for (std::size_t i = 1; i < frames_.size(); ++i) {
            const auto d = distance(frames_[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
    }
    return StampedFrame{next_ - frames_.size() + best, frames_[best]};
}

BufferedFrame RingBuffer::at(FrameStamp s) const {
    if (s >= next_) return {LookupStatus::NotYet, nullptr};
    const FrameStamp oldest = next_ - frames_.size();
    if (s < oldest) return {LookupStatus::Evicted, nullptr};
    return {LookupStatus::Ok, frames_[static_cast<std::size_t>(s - oldest)]};
}

// ---------------------------------------------------------------------------
// Interconnect core

struct Interconnect::Core : std::enable_shared_from_this<Interconnect::Core> {
    enum class Kind { Push, Attach, Detach, FrameStampQuery, Nearest, MostRecent, Buffered };

    using Reply = std::variant<std::monostate, std::promise<Sink>, std::promise<std::optional<FrameStamp>>,
                               std::promise<std::optional<StampedFrame>>, std::promise<BufferedFrame>>;

    struct Request {
        Kind kind = Kind::Push;
        std::shared_ptr<const DataFrame> frame;
        Timestamp t;
        FrameStamp stamp = 0;
        bool notify = false;
        Reply reply;
    };

    struct Channel {
        std::deque<Request> queue;
        std::uint64_t served = 0;
    };

    Core(const InterconnectOptions& o) : options(o), buffer(o.capacity) {
        channels[kSourceChannel];
        channels[kControlChannel];
    }

    void enqueue(std::uint32_t channel, Request r) {
        {
            std::lock_guard lock(mu);
            if (stopped) throw UsageError("interconnect is stopped");
            auto it = channels.find(channel);
            if (it == channels.end()) throw UsageError("sink is detached");
            it->second.queue.push_back(std::move(r));
        }
        pending.release();
    }

    template <typename T>
    std::future<T> request(std::uint32_t channel, Request r) {
        std::promise<T> p;
        auto fut = p.get_future();
        r.reply = std::move(p);
        enqueue(channel, std::move(r));
        return fut;
    }

    bool serve_one() {
        Request r;
        std::uint32_t channel = 0;
        {
            std::lock_guard lock(mu);
            if (stopped) return false;
            // Next non-empty queue after the one served last, wrapping.
            auto it = channels.upper_bound(cursor);
            for (std::size_t n = 0; n <= channels.size(); ++n, ++it) {
                if (it == channels.end()) it = channels.begin();
                if (!it->second.queue.empty()) break;
            }
            if (it == channels.end() || it->second.queue.empty()) return false;
            channel = it->first;
            cursor = channel;
            r = std::move(it->second.queue.front());
            it->second.queue.pop_front();
            if (options.record_trace) trace.push_back({channel, it->second.served});
            ++it->second.served;
        }
        process(channel, r);
        return true;
    }

    void process(std::uint32_t channel, Request& r) {
        switch (r.kind) {
            case Kind::Push:
                buffer.push(std::move(r.frame));
                for (auto& [id, sem] : wakeups) sem->release();
                break;
            case Kind::Attach: {
                Sink s;
                s.core_ = shared_from_this();
                s.attach_stamp_ = buffer.newest_stamp();
                {
                    std::lock_guard lock(mu);
                    s.channel_ = next_sink++;
                    channels[s.channel_];
                }
                if (r.notify) {
                    s.wakeups_ = std::make_shared<std::counting_semaphore<>>(0);
                    wakeups[s.channel_] = s.wakeups_;
                }
                std::get<std::promise<Sink>>(r.reply).set_value(std::move(s));
                break;
            }
            case Kind::Detach: {
                std::lock_guard lock(mu);
                channels.erase(channel);
                wakeups.erase(channel);
                break;
            }
            case Kind::FrameStampQuery:
                std::get<std::promise<std::optional<FrameStamp>>>(r.reply).set_value(buffer.newest_stamp());
                break;
            case Kind::Nearest:
                std::get<std::promise<std::optional<StampedFrame>>>(r.reply).set_value(buffer.nearest(r.t));
                break;
            case Kind::MostRecent:
                std::get<std::promise<std::optional<StampedFrame>>>(r.reply).set_value(buffer.most_recent());
                break;
            case Kind::Buffered:
                std::get<std::promise<BufferedFrame>>(r.reply).set_value(buffer.at(r.stamp));
                break;
        }
    }

    /// Marks the core stopped and fails everything still queued.
    void shut_down() noexcept {
        std::map<std::uint32_t, Channel> leftover;
        {
            std::lock_guard lock(mu);
            if (stopped) return;
            stopped = true;
            leftover.swap(channels);
        }
        const auto err = std::make_exception_ptr(UsageError("interconnect stopped before serving the request"));
        for (auto& [id, ch] : leftover) {
            for (auto& r : ch.queue) {
                std::visit(
                    [&](auto& p) {
                        if constexpr (!std::is_same_v<std::decay_t<decltype(p)>, std::monostate>) p.set_exception(err);
                    },
                    r.reply);
            }
        }
        pending.release();
    }

    bool is_stopped() const {
        std::lock_guard lock(mu);
        return stopped;
    }

    InterconnectOptions options;
    RingBuffer buffer;  // service side only
    std::map<std::uint32_t, std::shared_ptr<std::counting_semaphore<>>> wakeups;

    mutable std::mutex mu;
    std::map<std::uint32_t, Channel> channels;
    std::uint32_t cursor = kControlChannel;
    std::uint32_t next_sink = kFirstSinkChannel;
    bool stopped = false;
    std::vector<TraceEntry> trace;

    std::counting_semaphore<> pending{0};
};

// ---------------------------------------------------------------------------
// Interconnect

Interconnect::Interconnect(InterconnectOptions options)
    : options_(options), core_(std::make_shared<Core>(options)) {
    if (options_.scheduling == Scheduling::Threaded) {
        worker_ = std::thread([core = core_] {
            for (;;) {
                core->pending.acquire();
                if (core->is_stopped()) return;
                core->serve_one();
            }
        });
    }
}

Interconnect::~Interconnect() { stop(); }

void Interconnect::push(DataFrame frame) {
    Core::Request r;
    r.kind = Core::Kind::Push;
    r.frame = std::make_shared<const DataFrame>(std::move(frame));
    core_->enqueue(kSourceChannel, std::move(r));
}

std::future<Sink> Interconnect::submit_attach(bool with_notification) {
    Core::Request r;
    r.kind = Core::Kind::Attach;
    r.notify = with_notification;
    return core_->request<Sink>(kControlChannel, std::move(r));
}

Sink Interconnect::attach(bool with_notification) {
    if (options_.scheduling == Scheduling::Manual) {
        auto fut = submit_attach(with_notification);
        while (fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready && step()) {
        }
        return fut.get();
    }
    return submit_attach(with_notification).get();
}

bool Interconnect::step() {
    if (options_.scheduling != Scheduling::Manual) throw UsageError("step() requires manual scheduling");
    if (!core_->pending.try_acquire()) return false;
    return core_->serve_one();
}

std::size_t Interconnect::drain() {
    std::size_t n = 0;
    while (step()) ++n;
    return n;
}

void Interconnect::stop() noexcept {
    core_->shut_down();
    if (worker_.joinable()) worker_.join();
}

bool Interconnect::running() const noexcept { return !core_->is_stopped(); }

std::vector<TraceEntry> Interconnect::trace() const {
    std::lock_guard lock(core_->mu);
    return core_->trace;
}

// ---------------------------------------------------------------------------
// Sink

Sink::~Sink() { detach(); }

Sink& Sink::operator=(Sink&& other) noexcept {
    if (this != &other) {
        detach();
        core_ = std::move(other.core_);
        channel_ = other.channel_;
        attach_stamp_ = other.attach_stamp_;
        wakeups_ = std::move(other.wakeups_);
    }
    return *this;
}

void Sink::require_attached() const {
    if (!core_) throw UsageError("sink is not attached");
}

std::optional<FrameStamp> Sink::attach_stamp() const {
    require_attached();
    return attach_stamp_;
}

namespace {

template <typename T>
T wait_reply(std::future<T> fut, const Interconnect::Core& core) {
    if (core.options.scheduling == Scheduling::Manual &&
        fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
        throw UsageError("blocking sink queries need a threaded interconnect; use the submit_ forms");
    }
    return fut.get();
}

}  // namespace

std::future<std::optional<FrameStamp>> Sink::submit_frame_stamp() const {
    require_attached();
    Interconnect::Core::Request r;
    r.kind = Interconnect::Core::Kind::FrameStampQuery;
    return core_->request<std::optional<FrameStamp>>(channel_, std::move(r));
}

std::future<std::optional<StampedFrame>> Sink::submit_nearest(Timestamp t) const {
    require_attached();
    Interconnect::Core::Request r;
    r.kind = Interconnect::Core::Kind::Nearest;
    r.t = t;
    return core_->request<std::optional<StampedFrame>>(channel_, std::move(r));
}

std::future<std::optional<StampedFrame>> Sink::submit_most_recent() const {
    require_attached();
    Interconnect::Core::Request r;
    r.kind = Interconnect::Core::Kind::MostRecent;
    return core_->request<std::optional<StampedFrame>>(channel_, std::move(r));
}

std::future<BufferedFrame> Sink::submit_buffered(FrameStamp s) const {
    require_attached();
    Interconnect::Core::Request r;
    r.kind = Interconnect::Core::Kind::Buffered;
    r.stamp = s;
    return core_->request<BufferedFrame>(channel_, std::move(r));
}

std::optional<FrameStamp> Sink::get_frame_stamp() const { return wait_reply(submit_frame_stamp(), *core_); }

std::optional<StampedFrame> Sink::get_nearest(Timestamp t) const { return wait_reply(submit_nearest(t), *core_); }

std::optional<StampedFrame> Sink::get_most_recent_frame() const { return wait_reply(submit_most_recent(), *core_); }

BufferedFrame Sink::get_buffered_frame(FrameStamp s) const { return wait_reply(submit_buffered(s), *core_); }

void Sink::wait_for_frame() const {
    require_attached();
    if (!wakeups_) throw UsageError("sink was attached without notification");
    wakeups_->acquire();
}

bool Sink::wait_for_frame(std::chrono::milliseconds timeout) const {
    require_attached();
    if (!wakeups_) throw UsageError("sink was attached without notification");
    return wakeups_->try_acquire_for(timeout);
}

void Sink::detach() noexcept {
    if (!core_) return;
    try {
        Interconnect::Core::Request r;
        r.kind = Interconnect::Core::Kind::Detach;
        core_->enqueue(channel_, std::move(r));
    } catch (const Error&) {
        // Interconnect already gone.
    }
    core_.reset();
    wakeups_.reset();
}

// ---------------------------------------------------------------------------
// Source

Source::Source(Interconnect& target, std::unique_ptr<RxSession> rx) : target_(target), rx_(std::move(rx)) {}

Source::~Source() { stop(); }

void Source::start() {
    if (running_) throw UsageError("source already running");
    rx_->open();
    running_ = true;
    worker_ = std::thread([this] {
        while (running_) {
            try {
                target_.push(rx_->get_next_packet());
                ++forwarded_;
            } catch (const Error& e) {
                if (running_) {
                    std::lock_guard lock(mu_);
                    error_ = e.what();
                }
                break;
            }
        }
        running_ = false;
    });
}

void Source::stop() noexcept {
    running_ = false;
    if (rx_) rx_->close();
    if (worker_.joinable()) worker_.join();
}

std::optional<std::string> Source::last_error() const {
    std::lock_guard lock(mu_);
    return error_;
}

// ---------------------------------------------------------------------------
// Control

Control::~Control() { stop_all(); }

Interconnect& Control::start_stream(const std::string& host, StreamPort port, const StreamConfig& config,
                                    const ClientOptions& options, std::size_t capacity) {
    if (pipelines_.count(port)) throw UsageError(std::string(port_name(port)) + " is already streaming");
    Pipeline p;
    InterconnectOptions io;
    io.capacity = capacity;
    p.interconnect = std::make_unique<Interconnect>(io);
    p.source = std::make_unique<Source>(*p.interconnect, std::make_unique<RxSession>(host, port, config, options));
    p.source->start();
    auto& ref = *p.interconnect;
    pipelines_.emplace(port, std::move(p));
    return ref;
}

Interconnect& Control::interconnect(StreamPort port) {
    auto it = pipelines_.find(port);
    if (it == pipelines_.end()) throw UsageError(std::string(port_name(port)) + " is not streaming");
    return *it->second.interconnect;
}

Source& Control::source(StreamPort port) {
    auto it = pipelines_.find(port);
    if (it == pipelines_.end()) throw UsageError(std::string(port_name(port)) + " is not streaming");
    return *it->second.source;
}

Sink Control::attach(StreamPort port, bool with_notification) { return interconnect(port).attach(with_notification); }

void Control::stop_stream(StreamPort port) noexcept {
    auto it = pipelines_.find(port);
    if (it == pipelines_.end()) return;
    it->second.source->stop();
    it->second.interconnect->stop();
    pipelines_.erase(it);
}

void Control::stop_all() noexcept {
    for (auto& [port, p] : pipelines_) {
        p.source->stop();
        p.interconnect->stop();
    }
    pipelines_.clear();
}

}  // namespace hl2ss::mux
