#include "hl2ss/recording.hpp"

#include <cstring>
#include <iterator>

#include "hl2ss/errors.hpp"

namespace hl2ss {

namespace {

constexpr std::size_t kMagicSize = 8;

Bytes header_bytes(StreamPort port, StreamMode mode, ByteView config) {
    ByteWriter w(kMagicSize + 7 + config.size());
    w.text(std::string_view(kRecordingMagic, kMagicSize))
        .u16(static_cast<std::uint16_t>(port))
        .u8(static_cast<std::uint8_t>(mode))
        .u32(static_cast<std::uint32_t>(config.size()))
        .bytes(config);
    return std::move(w).take();
}

}  // namespace

Bytes encode_recording(const Recording& rec) {
    const bool pose = rec.mode == StreamMode::MODE_1;
    Bytes out = header_bytes(rec.port, rec.mode, rec.config);
    for (const auto& f : rec.frames) append_frame(out, f, pose);
    ByteWriter trailer;
    trailer.u64(rec.frames.size());
    const Bytes t = std::move(trailer).take();
    out.insert(out.end(), t.begin(), t.end());
    return out;
}

Recording decode_recording(ByteView bytes) {
    if (bytes.size() < kMagicSize + 7 + 8 || std::memcmp(bytes.data(), kRecordingMagic, kMagicSize) != 0) {
        throw ProtocolError("not an HL2SREC1 recording");
    }
    ByteReader r(bytes.subspan(kMagicSize));
    Recording rec;
    const std::uint16_t port = r.u16();
    const auto p = port_from_number(port);
    if (!p || !is_data_stream(*p)) throw ProtocolError("recording names unknown stream port " + std::to_string(port));
    rec.port = *p;
    const int mode = r.u8();
    if (mode > 1) throw ProtocolError("recording has an invalid stream mode " + std::to_string(mode));
    rec.mode = static_cast<StreamMode>(mode);
    const std::uint32_t cfg_len = r.u32();
    if (cfg_len > r.remaining()) throw TruncatedError("recording config blob is truncated");
    const ByteView cfg = r.bytes(cfg_len);
    rec.config.assign(cfg.begin(), cfg.end());
    if (r.remaining() < 8) throw TruncatedError("recording has no frame-count trailer");

    const std::size_t body_start = bytes.size() - r.remaining();
    const ByteView body = bytes.subspan(body_start, r.remaining() - 8);
    const std::uint64_t count = load_u64(bytes.data() + bytes.size() - 8);
    rec.frames = parse_frames(body, rec.mode == StreamMode::MODE_1);
    if (rec.frames.size() != count) {
        throw ProtocolError("recording trailer says " + std::to_string(count) + " frames, found " +
                            std::to_string(rec.frames.size()));
    }
    return rec;
}

void save_recording(const std::filesystem::path& path, const Recording& rec) {
    const Bytes b = encode_recording(rec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TransportError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) throw TransportError("short write to " + path.string());
}

Recording load_recording(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TransportError("cannot read " + path.string());
    const Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_recording(b);
}

// ---------------------------------------------------------------------------

RecordingWriter::RecordingWriter(const std::filesystem::path& path, StreamPort port, StreamMode mode,
                                 ByteView config)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), with_pose_(mode == StreamMode::MODE_1) {
    if (!out_) throw TransportError("cannot write " + path.string());
    const Bytes h = header_bytes(port, mode, config);
    out_.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
}

RecordingWriter::~RecordingWriter() {
    if (!finished_) {
        try {
            finish();
        } catch (const Error&) {
        }
    }
}

void RecordingWriter::write(const DataFrame& frame) {
    if (finished_) throw UsageError("recording already finished");
    scratch_.clear();
    append_frame(scratch_, frame, with_pose_);
    out_.write(reinterpret_cast<const char*>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
    ++count_;
}

void RecordingWriter::finish() {
    if (finished_) return;
    finished_ = true;
    std::array<std::uint8_t, 8> t{};
    for (int i = 0; i < 8; ++i) t[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(count_ >> (8 * i));
    out_.write(reinterpret_cast<const char*>(t.data()), 8);
    out_.flush();
    if (!out_) throw TransportError("short write to " + path_.string());
}

// ---------------------------------------------------------------------------

ReplayServer::ReplayServer(Recording rec, Options options) : rec_(std::move(rec)), options_(std::move(options)) {}

ReplayServer::~ReplayServer() { stop(); }

std::uint16_t ReplayServer::tcp_port() const noexcept {
    return static_cast<std::uint16_t>(static_cast<std::uint16_t>(rec_.port) + options_.port_offset);
}

void ReplayServer::start() {
    listener_ = net::TcpListener::bind(options_.bind_address, tcp_port());
    stopping_ = false;
    worker_ = std::thread([this] { run(); });
}

void ReplayServer::stop() noexcept {
    stopping_ = true;
    if (worker_.joinable()) worker_.join();
    listener_.close();
}

void ReplayServer::run() {
    while (!stopping_) {
        std::optional<net::TcpStream> conn;
        try {
            conn = listener_.accept(net::Duration(50));
        } catch (const TransportError&) {
            continue;
        }
        if (!conn) continue;
        try {
            serve(*conn);
            ++served_;
        } catch (const Error&) {
            // Client went away; wait for the next one.
        }
        conn->close();
    }
}

void ReplayServer::serve(net::TcpStream& s) {
    Bytes blob(config_size(rec_.port));
    if (!blob.empty()) s.recv_exact(blob, options_.handshake_timeout);

    const bool pose = rec_.mode == StreamMode::MODE_1;
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t t0 = rec_.frames.empty() ? 0 : rec_.frames.front().timestamp.ticks;
    Bytes wire;
    for (const auto& f : rec_.frames) {
        if (stopping_) return;
        if (options_.pace > 0.0 && f.timestamp.ticks >= t0) {
            const double sec = static_cast<double>(f.timestamp.ticks - t0) / kTicksPerSecond / options_.pace;
            std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                      std::chrono::duration<double>(sec)));
        }
        wire.clear();
        append_frame(wire, f, pose);
        s.send_all(wire);
    }
    s.shutdown_write();
    std::array<std::uint8_t, 256> sink{};
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (!stopping_ && std::chrono::steady_clock::now() < deadline) {
        auto n = s.recv_some(sink, net::Duration(50));
        if (n && *n == 0) break;
    }
}

}  // namespace hl2ss
