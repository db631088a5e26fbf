#pragma once

// Client sessions: stream receivers, Mode 2 calibration download, and the
// remote configuration / IPC clients.
//
// Typical use:
//
//   hl2ss::RxSession rx("192.168.1.15", hl2ss::StreamPort::PV, cfg);
//   rx.open();
//   while (running) {
//       auto frame = rx.get_next_packet();  // blocks
//       ...
//   }
//   rx.close();

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hl2ss/calibration.hpp"
#include "hl2ss/codecs.hpp"
#include "hl2ss/control.hpp"
#include "hl2ss/net.hpp"
#include "hl2ss/streams.hpp"
#include "hl2ss/wire.hpp"

namespace hl2ss {

struct ClientOptions {
    /// Added to every protocol port number. Lets several servers share a
    /// host (tests, replay).
    std::uint16_t port_offset = 0;
    net::Duration connect_timeout{5000};
    /// Applies to handshakes and Mode 2 transfers; stream reads block.
    net::Duration io_timeout{10000};
    /// Receive chunk size in bytes; 0 picks the per-port default.
    std::size_t chunk_size = 0;
    std::size_t max_payload = kDefaultMaxPayload;
    PvModeWhitelist pv_modes;
};

/// 65536 for video and depth, 4096 for the low-rate streams.
std::size_t default_chunk_size(StreamPort port) noexcept;

inline std::uint16_t tcp_port(StreamPort port, std::uint16_t offset) noexcept {
    return static_cast<std::uint16_t>(static_cast<std::uint16_t>(port) + offset);
}

class RxSession {
public:
    enum class State { Closed, Open };

    RxSession(std::string host, StreamPort port, StreamConfig config, ClientOptions options = {});
    ~RxSession();

    RxSession(const RxSession&) = delete;
    RxSession& operator=(const RxSession&) = delete;

    /// Validates the configuration (before connecting), connects and sends
    /// the handshake blob. Mode 2 is not a streaming mode; use
    /// download_calibration.
    void open();

    /// Blocks until one whole frame is available.
    ///
    /// Throws HandshakeError if the server closes before the first frame,
    /// TruncatedError if it closes mid-frame, EndOfStream if it closes at a
    /// frame boundary, and UsageError after close().
    DataFrame get_next_packet();

    /// Interrupts a blocked get_next_packet(); safe to call from another
    /// thread.
    void close() noexcept;

    State state() const noexcept { return open_.load() ? State::Open : State::Closed; }
    bool is_open() const noexcept { return open_.load(); }

    StreamPort port() const noexcept { return port_; }
    StreamMode mode() const noexcept { return mode_; }
    const StreamConfig& config() const noexcept { return config_; }
    const Bytes& config_blob() const noexcept { return config_blob_; }

    /// Frames whose timestamp went backwards. The session keeps going.
    std::uint64_t monotonicity_warnings() const noexcept { return warnings_; }
    void on_warning(std::function<void(const std::string&)> cb) { warn_ = std::move(cb); }

private:
    std::string host_;
    StreamPort port_;
    StreamConfig config_;
    ClientOptions options_;
    StreamMode mode_;
    Bytes config_blob_;

    net::TcpStream stream_;
    std::optional<FrameUnpacker> unpacker_;
    std::deque<DataFrame> pending_;
    std::vector<std::uint8_t> chunk_;
    std::atomic<bool> open_{false};
    std::uint64_t frames_ = 0;
    std::optional<Timestamp> last_ts_;
    std::uint64_t warnings_ = 0;
    std::function<void(const std::string&)> warn_;
};

// ---------------------------------------------------------------------------
// Decoded frames

using ImuBatch = std::vector<ImuSample>;

/// VLC (480x640x1) and PV (h x w x 3) decode to Image<u8>.
using DecodedPayload = std::variant<Image<std::uint8_t>, DepthAbImage, AudioFrame, ImuBatch, SpatialInputFrame>;

struct DecodedFrame {
    Timestamp timestamp;
    DecodedPayload payload;
    std::optional<Pose> pose;
};

/// Interprets a payload for `port`. Video and audio go through `codec`.
/// Throws CodecError carrying the raw payload.
DecodedPayload decode_payload(StreamPort port, const StreamConfig& config, ByteView payload,
                              const PayloadCodec& codec = *raw_codec());

class DecodedRxSession {
public:
    DecodedRxSession(std::string host, StreamPort port, StreamConfig config, ClientOptions options = {},
                     std::shared_ptr<const PayloadCodec> codec = raw_codec());

    void open() { rx_.open(); }
    DecodedFrame get_next_packet();
    void close() noexcept { rx_.close(); }

    RxSession& raw() noexcept { return rx_; }

private:
    RxSession rx_;
    std::shared_ptr<const PayloadCodec> codec_;
};

// ---------------------------------------------------------------------------
// Mode 2

/// Connects, sends `config_blob`, reads exactly `expected_size` bytes and
/// waits for the orderly close. Throws TruncatedError on a short read and
/// ProtocolError if the server sends more or keeps the connection open.
Bytes download_calibration_blob(const std::string& host, StreamPort port, ByteView config_blob,
                                std::size_t expected_size, const ClientOptions& options = {});

/// `config` must select Mode 2. Throws UnsupportedError for streams
/// without calibration.
Calibration download_calibration(const std::string& host, StreamPort port, const StreamConfig& config,
                                 const ClientOptions& options = {});

/// Uses default_config(port, MODE_2).
Calibration download_calibration(const std::string& host, StreamPort port, const ClientOptions& options = {});

// ---------------------------------------------------------------------------

class ControlClient {
public:
    ControlClient(const std::string& host, const ClientOptions& options = {});

    /// Fire-and-forget for commands 0-5; GetVersion must go through
    /// get_version().
    void send(const ControlCommand& cmd);
    ServerVersion get_version();

    void close() noexcept { stream_.close(); }

private:
    net::TcpStream stream_;
    net::Duration timeout_;
};

class IpcClient {
public:
    IpcClient(const std::string& host, const ClientOptions& options = {});

    /// Sends one message and waits for the 4-byte reply.
    std::uint32_t call(const IpcMessage& msg);
    std::uint32_t call(const SceneCommand& cmd) { return call(encode_scene(cmd)); }

    void close() noexcept { stream_.close(); }

private:
    net::TcpStream stream_;
    net::Duration timeout_;
};

}  // namespace hl2ss
