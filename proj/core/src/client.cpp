#include "hl2ss/client.hpp"

#include <string>

#include "hl2ss/errors.hpp"

namespace hl2ss {

std::size_t default_chunk_size(StreamPort port) noexcept {
    if (has_video_config(port) || port == StreamPort::DEPTH_LONGTHROW) return 65536;
    return 4096;
}

RxSession::RxSession(std::string host, StreamPort port, StreamConfig config, ClientOptions options)
    : host_(std::move(host)),
      port_(port),
      config_(std::move(config)),
      options_(std::move(options)),
      mode_(config_mode(config_)) {}

RxSession::~RxSession() { close(); }

void RxSession::open() {
    if (open_) throw UsageError("session already open");
    validate_config(port_, config_, options_.pv_modes);
    if (mode_ == StreamMode::MODE_2) {
        throw UsageError("mode 2 is a one-shot calibration transfer; use download_calibration");
    }
    config_blob_ = encode_config(port_, config_, options_.pv_modes);

    stream_ = net::TcpStream::connect(host_, tcp_port(port_, options_.port_offset), options_.connect_timeout);
    if (!config_blob_.empty()) stream_.send_all(config_blob_);

    unpacker_.emplace(mode_ == StreamMode::MODE_1, options_.max_payload);
    pending_.clear();
    chunk_.resize(options_.chunk_size ? options_.chunk_size : default_chunk_size(port_));
    frames_ = 0;
    last_ts_.reset();
    open_ = true;
}

DataFrame RxSession::get_next_packet() {
    if (!open_) throw UsageError("get_next_packet on a closed session");
    while (pending_.empty()) {
        const auto n = stream_.recv_some(chunk_);
        if (!open_) throw UsageError("session closed");
        if (*n == 0) {
            open_ = false;
            if (frames_ == 0 && unpacker_->at_frame_boundary()) {
                throw HandshakeError(std::string(port_name(port_)) + ": server closed the connection before any data");
            }
            if (!unpacker_->at_frame_boundary()) {
                throw TruncatedError(std::string(port_name(port_)) + ": stream closed in the middle of a frame");
            }
            throw EndOfStream(std::string(port_name(port_)) + ": stream closed by server");
        }
        std::vector<DataFrame> frames;
        try {
            unpacker_->feed(ByteView(chunk_.data(), *n), frames);
        } catch (...) {
            open_ = false;
            stream_.shutdown();
            throw;
        }
        for (auto& f : frames) pending_.push_back(std::move(f));
    }
    DataFrame f = std::move(pending_.front());
    pending_.pop_front();
    ++frames_;
    if (last_ts_ && f.timestamp < *last_ts_) {
        ++warnings_;
        if (warn_) {
            warn_(std::string(port_name(port_)) + ": timestamp went backwards (" + std::to_string(last_ts_->ticks) +
                  " -> " + std::to_string(f.timestamp.ticks) + ")");
        }
    }
    last_ts_ = f.timestamp;
    return f;
}

void RxSession::close() noexcept {
    open_ = false;
    stream_.shutdown();
}

// ---------------------------------------------------------------------------

DecodedPayload decode_payload(StreamPort port, const StreamConfig& config, ByteView payload,
                              const PayloadCodec& codec) {
    auto raw_copy = [&] { return Bytes(payload.begin(), payload.end()); };
    try {
        if (is_vlc(port)) {
            auto img = gray_from_raw(codec.decode(payload));
            if (img.width != kVlcWidth || img.height != kVlcHeight) {
                throw CodecError("vlc frame must be 640x480", raw_copy());
            }
            return img;
        }
        switch (port) {
            case StreamPort::PV: {
                auto img = color_from_raw(codec.decode(payload));
                const auto* v = std::get_if<VideoConfig>(&config);
                if (v && (img.width != v->width || img.height != v->height)) {
                    throw CodecError("pv frame size does not match the configured resolution", raw_copy());
                }
                return img;
            }
            case StreamPort::DEPTH_LONGTHROW: return decode_depth_png(payload);
            case StreamPort::MICROPHONE: return audio_from_raw(codec.decode(payload));
            case StreamPort::IMU_ACCEL:
            case StreamPort::IMU_GYRO:
            case StreamPort::IMU_MAG: return unpack_imu_batch(payload, port);
            case StreamPort::SPATIAL_INPUT: return unpack_spatial_input(payload);
            default: break;
        }
    } catch (const CodecError& e) {
        if (!e.raw_payload().empty() || payload.empty()) throw;
        throw CodecError(e.what(), raw_copy());
    } catch (const ProtocolError& e) {
        throw CodecError(e.what(), raw_copy());
    }
    throw UnsupportedError(std::string(port_name(port)) + " has no decodable payload");
}

DecodedRxSession::DecodedRxSession(std::string host, StreamPort port, StreamConfig config, ClientOptions options,
                                   std::shared_ptr<const PayloadCodec> codec)
    : rx_(std::move(host), port, std::move(config), std::move(options)), codec_(std::move(codec)) {}

DecodedFrame DecodedRxSession::get_next_packet() {
    DataFrame f = rx_.get_next_packet();
    return DecodedFrame{f.timestamp, decode_payload(rx_.port(), rx_.config(), f.payload, *codec_), f.pose};
}

// ---------------------------------------------------------------------------

Bytes download_calibration_blob(const std::string& host, StreamPort port, ByteView config_blob,
                                std::size_t expected_size, const ClientOptions& options) {
    auto stream = net::TcpStream::connect(host, tcp_port(port, options.port_offset), options.connect_timeout);
    stream.send_all(config_blob);
    Bytes blob(expected_size);
    stream.recv_exact(blob, options.io_timeout);

    std::uint8_t extra = 0;
    const auto n = stream.recv_some(std::span(&extra, 1), options.io_timeout);
    if (!n) throw ProtocolError("server did not close the connection after the calibration blob");
    if (*n != 0) throw ProtocolError("server sent more than " + std::to_string(expected_size) + " calibration bytes");
    return blob;
}

Calibration download_calibration(const std::string& host, StreamPort port, const StreamConfig& config,
                                 const ClientOptions& options) {
    if (!is_data_stream(port) || !supports_mode(port, StreamMode::MODE_2)) {
        throw UnsupportedError(std::string(port_name(port)) + " does not support mode 2 (calibration)");
    }
    if (config_mode(config) != StreamMode::MODE_2) throw ValidationError("calibration download requires mode 2");
    const Bytes blob = encode_config(port, config, options.pv_modes);
    const std::size_t size = calibration_size(port);
    return parse_calibration(port, download_calibration_blob(host, port, blob, size, options));
}

Calibration download_calibration(const std::string& host, StreamPort port, const ClientOptions& options) {
    if (!is_data_stream(port) || !supports_mode(port, StreamMode::MODE_2)) {
        throw UnsupportedError(std::string(port_name(port)) + " does not support mode 2 (calibration)");
    }
    return download_calibration(host, port, default_config(port, StreamMode::MODE_2), options);
}

// ---------------------------------------------------------------------------

ControlClient::ControlClient(const std::string& host, const ClientOptions& options)
    : stream_(net::TcpStream::connect(host, tcp_port(StreamPort::CONTROL, options.port_offset),
                                      options.connect_timeout)),
      timeout_(options.io_timeout) {}

void ControlClient::send(const ControlCommand& cmd) {
    if (control_expects_reply(cmd)) throw UsageError("use get_version() for commands with a reply");
    stream_.send_all(encode_control(cmd));
}

ServerVersion ControlClient::get_version() {
    stream_.send_all(encode_control(GetVersion{}));
    Bytes reply(kVersionReplySize);
    stream_.recv_exact(reply, timeout_);
    return decode_version(reply);
}

IpcClient::IpcClient(const std::string& host, const ClientOptions& options)
    : stream_(net::TcpStream::connect(host, tcp_port(StreamPort::UNITY_IPC, options.port_offset),
                                      options.connect_timeout)),
      timeout_(options.io_timeout) {}

std::uint32_t IpcClient::call(const IpcMessage& msg) {
    stream_.send_all(encode_ipc(msg));
    std::array<std::uint8_t, 4> reply{};
    stream_.recv_exact(reply, timeout_);
    return load_u32(reply.data());
}

}  // namespace hl2ss
