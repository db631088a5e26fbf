#pragma once

// Recording container:
//
//   "HL2SREC1" | u16 port | u8 mode | u32 config_len | config bytes
//   | frames in wire format | u64 frame_count
//
// All integers little-endian. Frames carry a pose trailer iff mode is 1.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hl2ss/bytes.hpp"
#include "hl2ss/net.hpp"
#include "hl2ss/streams.hpp"
#include "hl2ss/wire.hpp"

namespace hl2ss {

inline constexpr char kRecordingMagic[9] = "HL2SREC1";

struct Recording {
    StreamPort port = StreamPort::VLC_LEFTFRONT;
    StreamMode mode = StreamMode::MODE_0;
    Bytes config;  // handshake blob sent to the server
    std::vector<DataFrame> frames;

    bool operator==(const Recording&) const = default;
};

Bytes encode_recording(const Recording& rec);
/// Throws ProtocolError on bad magic, truncation or a count mismatch.
Recording decode_recording(ByteView bytes);

void save_recording(const std::filesystem::path& path, const Recording& rec);
Recording load_recording(const std::filesystem::path& path);

/// Incremental writer; the trailer goes out in finish().
class RecordingWriter {
public:
    RecordingWriter(const std::filesystem::path& path, StreamPort port, StreamMode mode, ByteView config);
    ~RecordingWriter();

    void write(const DataFrame& frame);
    void finish();
    std::uint64_t count() const noexcept { return count_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    bool with_pose_;
    std::uint64_t count_ = 0;
    bool finished_ = false;
    Bytes scratch_;
};

/// Serves a recording on its stream port, once per client connection:
/// reads the handshake blob, sends every frame, then closes.
class ReplayServer {
public:
    struct Options {
        std::string bind_address = "127.0.0.1";
        std::uint16_t port_offset = 0;
        /// 0 sends as fast as possible; otherwise frames follow their
        /// timestamps at this speed-up.
        double pace = 0.0;
        net::Duration handshake_timeout{2000};
    };

    ReplayServer(Recording rec, Options options);
    ~ReplayServer();

    ReplayServer(const ReplayServer&) = delete;
    ReplayServer& operator=(const ReplayServer&) = delete;

    void start();
    void stop() noexcept;

    std::uint16_t tcp_port() const noexcept;
    std::uint64_t sessions_served() const noexcept { return served_.load(); }

private:
    void run();
    void serve(net::TcpStream& s);

    Recording rec_;
    Options options_;
    net::TcpListener listener_;
    std::thread worker_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> served_{0};
};

}  // namespace hl2ss
