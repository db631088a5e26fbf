#include "hl2ss/emulator.hpp"

#include <cmath>
#include <condition_variable>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "hl2ss/errors.hpp"

namespace hl2ss {

__extension__ using u128 = unsigned __int128;

std::uint64_t frame_offset_ticks(std::uint64_t index, const Rate& rate) noexcept {
    const u128 scaled = static_cast<u128>(index) * kTicksPerSecond * rate.den;
    return static_cast<std::uint64_t>((2 * scaled + rate.num) / (2 * static_cast<u128>(rate.num)));
}

Rate stream_rate(StreamPort port, const EmulatorConfig& config, const StreamConfig& stream_config) {
    const auto& r = config.rates;
    if (is_vlc(port)) return {r.vlc, 1};
    switch (port) {
        case StreamPort::DEPTH_LONGTHROW: return {r.depth, 1};
        case StreamPort::IMU_ACCEL: return {r.imu_accel, 1};
        case StreamPort::IMU_GYRO: return {r.imu_gyro, 1};
        case StreamPort::IMU_MAG: return {r.imu_mag, 1};
        case StreamPort::PV: {
            const auto* v = std::get_if<VideoConfig>(&stream_config);
            return {v && v->framerate ? v->framerate : 30u, 1};
        }
        case StreamPort::MICROPHONE: return {kAudioSampleRate, kAudioSamplesPerFrame};
        case StreamPort::SPATIAL_INPUT: return {r.spatial_input, 1};
        default: throw UnsupportedError(std::string(port_name(port)) + " is not a data stream");
    }
}

std::optional<Bytes> apply_control(DeviceSettings& s, const ControlCommand& cmd, const ServerVersion& version) {
    if (auto c = std::get_if<SetMarkerState>(&cmd)) s.marker_enabled = c->enable;
    else if (auto c = std::get_if<SetFocus>(&cmd)) s.focus = *c;
    else if (auto c = std::get_if<SetVideoTemporalDenoising>(&cmd)) s.temporal_denoising = c->mode;
    else if (auto c = std::get_if<SetWhiteBalancePreset>(&cmd)) s.white_balance_preset = c->preset;
    else if (auto c = std::get_if<SetWhiteBalanceValue>(&cmd)) s.white_balance_value = c->value;
    else if (auto c = std::get_if<SetExposure>(&cmd)) {
        s.exposure_mode = c->mode;
        s.exposure_value = c->value;
    } else if (std::holds_alternative<GetVersion>(cmd)) {
        return encode_version(version);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLapSeconds = 10.0;

double seconds(std::uint64_t ticks) { return static_cast<double>(ticks) / static_cast<double>(kTicksPerSecond); }

int vlc_seed(StreamPort port) { return static_cast<int>(port) - static_cast<int>(StreamPort::VLC_LEFTFRONT); }

Mat4f translation(float x, float y, float z) {
    Mat4f m = identity_mat4();
    m[3] = x;
    m[7] = y;
    m[11] = z;
    return m;
}

}  // namespace

Pose trajectory(std::uint64_t sim_ticks) {
    const double theta = kTwoPi * seconds(sim_ticks) / kLapSeconds;
    const double c = std::cos(theta), s = std::sin(theta);
    // Columns: right, up, back (= -forward); forward is the direction of travel.
    const double right[3] = {-c, 0.0, -s};
    const double up[3] = {0.0, 1.0, 0.0};
    const double back[3] = {s, 0.0, -c};
    const double pos[3] = {c, 1.6, s};
    Pose p;
    for (int r = 0; r < 3; ++r) {
        p.at(r, 0) = static_cast<float>(right[r]);
        p.at(r, 1) = static_cast<float>(up[r]);
        p.at(r, 2) = static_cast<float>(back[r]);
        p.at(r, 3) = static_cast<float>(pos[r]);
    }
    p.at(3, 3) = 1.0f;
    return p;
}

bool tracking_lost(const std::vector<TrackingLossInterval>& schedule, std::uint64_t sim_ticks) {
    const double t = seconds(sim_ticks);
    for (const auto& iv : schedule) {
        if (t >= iv.start_s && t < iv.end_s) return true;
    }
    return false;
}

Pose frame_pose(const EmulatorConfig& config, Timestamp ts) {
    const std::uint64_t since = ts.ticks >= config.clock_origin_ticks ? ts.ticks - config.clock_origin_ticks : 0;
    if (tracking_lost(config.tracking_loss, since)) return Pose::invalid();
    return trajectory(since);
}

GrayImage vlc_image(StreamPort port, std::uint64_t index) {
    GrayImage img(kVlcWidth, kVlcHeight, 1);
    const auto shift = static_cast<unsigned>(index * 4 + static_cast<std::uint64_t>(vlc_seed(port)) * 37);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const bool check = ((u / 40) + (v / 40)) & 1;
            img.at(u, v) = static_cast<std::uint8_t>((u / 2 + v / 2 + shift) + (check ? 64 : 0));
        }
    }
    return img;
}

ColorImage pv_image(int width, int height, std::uint64_t index, bool marker) {
    ColorImage img(width, height, 3);
    const auto r = static_cast<std::uint8_t>(index * 8);
    for (int v = 0; v < height; ++v) {
        const auto g = static_cast<std::uint8_t>(v * 255 / std::max(1, height - 1));
        for (int u = 0; u < width; ++u) {
            img.at(u, v, 0) = static_cast<std::uint8_t>(u * 255 / std::max(1, width - 1));
            img.at(u, v, 1) = g;
            img.at(u, v, 2) = r;
        }
    }
    if (marker) {
        const int row = height * 9 / 10;
        for (int u = 0; u < width; ++u) {
            img.at(u, row, 0) = 0;
            img.at(u, row, 1) = 255;
            img.at(u, row, 2) = 0;
        }
    }
    return img;
}

DepthFrame depth_frame(std::uint64_t index) {
    DepthFrame f;
    const int box_u = static_cast<int>((index * 6) % static_cast<std::uint64_t>(kDepthWidth - 60));
    const double r2 = 165.0 * 165.0;
    for (int v = 0; v < kDepthHeight; ++v) {
        for (int u = 0; u < kDepthWidth; ++u) {
            const auto i = DepthAbImage::index(u, v);
            const bool in_box = u >= box_u && u < box_u + 60 && v >= 110 && v < 170;
            const auto depth = static_cast<std::uint16_t>(in_box ? 700 : 1000 + 2 * v);
            f.image.depth[i] = depth;
            f.image.ab[i] = static_cast<std::uint16_t>(40000 - depth * 10 + u * 7);
            const double du = u - 159.5, dv = v - 143.5;
            f.sigma.sigma[i] = (du * du + dv * dv > r2) ? 0x80 : 0;
        }
    }
    return f;
}

AudioFrame audio_frame(std::uint64_t index) {
    AudioFrame a(kAudioSamplesPerFrame, kAudioChannels);
    for (int i = 0; i < kAudioSamplesPerFrame; ++i) {
        const double n = static_cast<double>(index * kAudioSamplesPerFrame + static_cast<std::uint64_t>(i));
        a.at(i, 0) = static_cast<float>(0.5 * std::sin(kTwoPi * 440.0 * n / kAudioSampleRate));
        a.at(i, 1) = static_cast<float>(0.5 * std::sin(kTwoPi * 660.0 * n / kAudioSampleRate));
    }
    return a;
}

std::vector<ImuSample> imu_batch(StreamPort port, std::uint64_t index, Timestamp ts, const Rate& rate) {
    const std::size_t n = imu_batch_size(port);
    std::vector<ImuSample> out(n);
    const double sample_period_ns = 1e9 / (rate.fps() * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t k = index * n + i;
        const double t = static_cast<double>(k) * sample_period_ns * 1e-9;
        auto& s = out[i];
        s.sensor_timestamp_ns = 1'000'000'000'000ull + static_cast<std::uint64_t>(std::llround(k * sample_period_ns));
        s.frame_timestamp = ts.ticks;
        switch (port) {
            case StreamPort::IMU_ACCEL:
                s.x = static_cast<float>(0.1 * std::sin(kTwoPi * t));
                s.y = -9.81f;
                s.z = static_cast<float>(0.1 * std::cos(kTwoPi * t));
                break;
            case StreamPort::IMU_GYRO:
                s.x = static_cast<float>(5.0 * std::sin(kTwoPi * 0.5 * t));
                s.y = static_cast<float>(360.0 / kLapSeconds);
                s.z = static_cast<float>(5.0 * std::cos(kTwoPi * 0.5 * t));
                break;
            default:
                s.x = 0.2f;
                s.y = static_cast<float>(0.4 + 0.01 * std::sin(kTwoPi * 0.1 * t));
                s.z = -0.1f;
                break;
        }
    }
    return out;
}

SpatialInputFrame spatial_input(Timestamp ts, std::uint64_t origin_ticks, std::uint64_t index) {
    const Pose p = trajectory(ts.ticks >= origin_ticks ? ts.ticks - origin_ticks : 0);
    SpatialInputFrame f;
    f.valid = SpatialInputFrame::HEAD | SpatialInputFrame::EYE;
    if ((index / 60) % 2 == 0) f.valid |= SpatialInputFrame::LEFT_HAND;
    if ((index / 90) % 2 == 0) f.valid |= SpatialInputFrame::RIGHT_HAND;

    const Vec3f pos{p.at(0, 3), p.at(1, 3), p.at(2, 3)};
    const Vec3f fwd{-p.at(0, 2), -p.at(1, 2), -p.at(2, 2)};
    const Vec3f right{p.at(0, 0), p.at(1, 0), p.at(2, 0)};
    f.head.position = pos;
    f.head.forward = fwd;
    f.head.up = {p.at(0, 1), p.at(1, 1), p.at(2, 1)};
    f.eye.origin = pos;
    f.eye.direction = fwd;

    auto fill_hand = [&](Hand& hand, float side) {
        for (std::size_t j = 0; j < kHandJointCount; ++j) {
            auto& joint = hand.joints[j];
            const float along = 0.35f + 0.005f * static_cast<float>(j);
            for (int a = 0; a < 3; ++a) {
                joint.position[a] = pos[a] + along * fwd[a] + side * 0.2f * right[a] - (a == 1 ? 0.3f : 0.0f);
            }
            joint.orientation = {0.0f, 0.0f, 0.0f, 1.0f};
            joint.radius = 0.01f;
            joint.accuracy = 1;
        }
    };
    if (f.left_valid()) fill_hand(f.left, -1.0f);
    if (f.right_valid()) fill_hand(f.right, 1.0f);
    return f;
}

Calibration calibration(StreamPort port, const VideoConfig* pv_config) {
    if (is_vlc(port)) {
        static constexpr float offsets[4][3] = {{-0.05f, 0.0f, 0.0f}, {-0.1f, 0.0f, 0.02f},
                                                {0.05f, 0.0f, 0.0f},  {0.1f, 0.0f, 0.02f}};
        const auto* o = offsets[vlc_seed(port)];
        return synth_vlc_calibration(default_vlc_intrinsics(), translation(o[0], o[1], o[2]));
    }
    switch (port) {
        case StreamPort::DEPTH_LONGTHROW:
            return synth_depth_calibration(default_depth_intrinsics(), translation(0.0f, -0.02f, 0.0f));
        case StreamPort::IMU_ACCEL: return ImuCalibration{translation(0.0f, 0.01f, 0.0f)};
        case StreamPort::IMU_GYRO: return ImuCalibration{translation(0.0f, 0.01f, 0.005f)};
        case StreamPort::PV: {
            const int w = pv_config ? pv_config->width : 1920;
            const int h = pv_config ? pv_config->height : 1080;
            return synth_pv_calibration(default_pv_intrinsics(w, h));
        }
        default: (void)calibration_size(port);
    }
    throw UnsupportedError(std::string(port_name(port)) + " has no calibration");
}

}  // namespace synth

Bytes synth_payload(StreamPort port, const StreamConfig& stream_config, std::uint64_t index, Timestamp ts,
                    const EmulatorConfig& config, const DeviceSettings& settings) {
    if (config.payload_source) return config.payload_source(port, index);
    const RawCodec raw;
    if (is_vlc(port)) {
        auto img = synth::vlc_image(port, index);
        return raw.encode({static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height),
                           std::move(img.pixels)});
    }
    switch (port) {
        case StreamPort::PV: {
            const auto& v = std::get<VideoConfig>(stream_config);
            auto img = synth::pv_image(v.width, v.height, index, settings.marker_enabled);
            return raw.encode({v.width, v.height, std::move(img.pixels)});
        }
        case StreamPort::DEPTH_LONGTHROW: {
            const auto f = synth::depth_frame(index);
            return encode_depth_png(f.image, f.sigma, PngOptions{config.png_compression_level});
        }
        case StreamPort::MICROPHONE:
            return raw.encode({kAudioSamplesPerFrame, kAudioChannels, audio_to_bytes(synth::audio_frame(index))});
        case StreamPort::IMU_ACCEL:
        case StreamPort::IMU_GYRO:
        case StreamPort::IMU_MAG:
            return pack_imu_batch(synth::imu_batch(port, index, ts, stream_rate(port, config, stream_config)), port);
        case StreamPort::SPATIAL_INPUT:
            return pack_spatial_input(synth::spatial_input(ts, config.clock_origin_ticks, index));
        default: throw UnsupportedError(std::string(port_name(port)) + " is not a data stream");
    }
}

// ---------------------------------------------------------------------------

class Emulator::PortServer {
public:
    PortServer(Emulator& emu, StreamPort port, net::TcpListener listener)
        : emu_(emu), port_(port), listener_(std::move(listener)) {}

    ~PortServer() { stop(); }

    void start() { acceptor_ = std::thread([this] { accept_loop(); }); }

    void stop() noexcept {
        {
            std::lock_guard lock(mu_);
            if (stopping_ && !acceptor_.joinable() && !session_thread_.joinable()) return;
            stopping_ = true;
            if (session_) session_->shutdown();
        }
        cv_.notify_all();
        if (acceptor_.joinable()) acceptor_.join();
        if (session_thread_.joinable()) session_thread_.join();
        listener_.close();
    }

    PortStats stats() const {
        std::lock_guard lock(mu_);
        return stats_;
    }

    bool active() const { return active_.load(); }

private:
    void accept_loop() {
        for (;;) {
            {
                std::lock_guard lock(mu_);
                if (stopping_) return;
            }
            std::optional<net::TcpStream> conn;
            try {
                conn = listener_.accept(net::Duration(50));
            } catch (const TransportError&) {
                continue;
            }
            if (!conn) continue;

            if (active_.load()) {
                // One client per port: accept, then close without data.
                conn->close();
                std::lock_guard lock(mu_);
                ++stats_.rejected;
                continue;
            }
            if (session_thread_.joinable()) session_thread_.join();

            auto stream = std::make_shared<net::TcpStream>(std::move(*conn));
            {
                std::lock_guard lock(mu_);
                if (stopping_) return;
                session_ = stream;
                ++stats_.sessions;
            }
            active_ = true;
            session_thread_ = std::thread([this, stream] {
                try {
                    run_session(*stream);
                } catch (const Error&) {
                    // Transport or protocol failure ends the session only.
                }
                stream->close();
                {
                    std::lock_guard lock(mu_);
                    session_.reset();
                }
                active_ = false;
            });
        }
    }

    bool stopping() {
        std::lock_guard lock(mu_);
        return stopping_;
    }

    /// Sleeps until `when`; false if the server is stopping.
    bool wait_until(std::chrono::steady_clock::time_point when) {
        std::unique_lock lock(mu_);
        return !cv_.wait_until(lock, when, [this] { return stopping_; });
    }

    void run_session(net::TcpStream& s) {
        switch (port_) {
            case StreamPort::CONTROL: control_session(s); break;
            case StreamPort::UNITY_IPC: ipc_session(s); break;
            default: stream_session(s); break;
        }
    }

    void handshake_failed() {
        std::lock_guard lock(mu_);
        ++stats_.handshake_failures;
    }

    void stream_session(net::TcpStream& s) {
        const auto& cfg = emu_.config_;
        Bytes blob(config_size(port_));
        StreamConfig stream_cfg;
        try {
            s.recv_exact(blob, cfg.handshake_timeout);
            stream_cfg = decode_config(port_, blob);
            validate_config(port_, stream_cfg, cfg.pv_modes);
        } catch (const Error&) {
            handshake_failed();
            return;
        }
        const StreamMode mode = config_mode(stream_cfg);

        if (mode == StreamMode::MODE_2) {
            const auto cal = synth::calibration(port_, std::get_if<VideoConfig>(&stream_cfg));
            s.send_all(encode_calibration(cal));
            s.shutdown_write();
            // Let the client read everything and close first.
            std::array<std::uint8_t, 256> sink{};
            const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
            while (std::chrono::steady_clock::now() < deadline && !stopping()) {
                auto n = s.recv_some(sink, net::Duration(50));
                if (n && *n == 0) break;
            }
            return;
        }

        const bool with_pose = mode == StreamMode::MODE_1;
        const Rate rate = stream_rate(port_, cfg, stream_cfg);
        const Timestamp t0 = emu_.now();
        std::optional<Timestamp> prev;
        Bytes wire;
        for (std::uint64_t k = 0;; ++k) {
            const Timestamp ts{t0.ticks + frame_offset_ticks(k, rate)};
            if (prev && ts <= *prev) {
                throw std::logic_error("emulator produced a non-increasing timestamp on " +
                                       std::string(port_name(port_)));
            }
            prev = ts;
            if (!wait_until(emu_.wall_time(ts))) return;
            if (s.peer_closed()) return;

            DataFrame frame;
            frame.timestamp = ts;
            frame.payload = synth_payload(port_, stream_cfg, k, ts, cfg,
                                          port_ == StreamPort::PV ? emu_.settings() : DeviceSettings{});
            if (with_pose) frame.pose = synth::frame_pose(cfg, ts);
            if (cfg.on_frame) cfg.on_frame(port_, frame);

            wire.clear();
            append_frame(wire, frame, with_pose);
            s.send_all(wire);
            std::lock_guard lock(mu_);
            ++stats_.frames_sent;
        }
    }

    void control_session(net::TcpStream& s) {
        for (;;) {
            std::array<std::uint8_t, 21> buf{};
            s.recv_exact(std::span(buf.data(), 1));
            const auto size = control_param_size(buf[0]);
            if (!size) return;  // unknown tag: drop the connection
            if (*size) s.recv_exact(std::span(buf.data() + 1, *size));
            const auto cmd = decode_control(ByteView(buf.data(), 1 + *size));
            std::optional<Bytes> reply;
            {
                std::lock_guard lock(emu_.settings_mu_);
                reply = apply_control(emu_.settings_, cmd, emu_.config_.version);
            }
            if (reply) s.send_all(*reply);
        }
    }

    void ipc_session(net::TcpStream& s) {
        constexpr std::uint32_t kMaxParams = 64u << 20;
        for (;;) {
            std::array<std::uint8_t, kIpcHeaderSize> header{};
            s.recv_exact(header);
            IpcMessage msg;
            msg.command_id = load_u32(header.data());
            const std::uint32_t size = load_u32(header.data() + 4);
            if (msg.command_id == kIpcReservedCommand || size > kMaxParams) return;
            msg.params.resize(size);
            if (size) s.recv_exact(msg.params);

            std::uint32_t reply = SceneState::kFailure;
            try {
                const auto cmd = decode_scene(msg);
                std::lock_guard lock(emu_.scene_mu_);
                reply = emu_.scene_.apply(cmd);
            } catch (const ProtocolError&) {
                reply = SceneState::kFailure;
            }
            std::array<std::uint8_t, 4> out{};
            store_u32(out.data(), reply);
            s.send_all(out);
        }
    }

    Emulator& emu_;
    StreamPort port_;
    net::TcpListener listener_;
    std::thread acceptor_;
    std::thread session_thread_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    bool stopping_ = false;
    std::shared_ptr<net::TcpStream> session_;
    std::atomic<bool> active_{false};
    PortStats stats_;
};

// ---------------------------------------------------------------------------

Emulator::Emulator(EmulatorConfig config) : config_(std::move(config)) {
    if (!(config_.clock_multiplier > 0.0)) throw ValidationError("clock multiplier must be positive");
    if (config_.rates.depth < 1 || config_.rates.depth > 5) throw ValidationError("depth rate must be 1..5 fps");
}

Emulator::~Emulator() { stop(); }

void Emulator::start() {
    if (running_) throw UsageError("emulator already running");
    std::vector<std::pair<StreamPort, net::TcpListener>> listeners;
    for (StreamPort port : all_server_ports()) {
        const std::uint16_t number = static_cast<std::uint16_t>(static_cast<std::uint16_t>(port) + config_.port_offset);
        try {
            listeners.emplace_back(port, net::TcpListener::bind(config_.bind_address, number));
        } catch (const TransportError& e) {
            throw TransportError("emulator: cannot listen on port " + std::to_string(number) + " (" +
                                 std::string(port_name(port)) + "): " + e.what());
        }
    }
    wall_origin_ = std::chrono::steady_clock::now();
    for (auto& [port, listener] : listeners) {
        servers_.emplace(port, std::make_unique<PortServer>(*this, port, std::move(listener)));
    }
    running_ = true;
    for (auto& [port, server] : servers_) server->start();
}

void Emulator::stop() noexcept {
    for (auto& [port, server] : servers_) server->stop();
    servers_.clear();
    running_ = false;
}

Timestamp Emulator::now() const noexcept {
    const auto wall = std::chrono::steady_clock::now() - wall_origin_;
    const double ticks = std::chrono::duration<double>(wall).count() * static_cast<double>(kTicksPerSecond) *
                         config_.clock_multiplier;
    return Timestamp{config_.clock_origin_ticks + static_cast<std::uint64_t>(ticks)};
}

std::chrono::steady_clock::time_point Emulator::wall_time(Timestamp ts) const noexcept {
    const double sim = static_cast<double>(ts.ticks - std::min(ts.ticks, config_.clock_origin_ticks)) /
                       static_cast<double>(kTicksPerSecond);
    return wall_origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(sim / config_.clock_multiplier));
}

DeviceSettings Emulator::settings() const {
    std::lock_guard lock(settings_mu_);
    return settings_;
}

void Emulator::set_settings(const DeviceSettings& s) {
    std::lock_guard lock(settings_mu_);
    settings_ = s;
}

SceneState Emulator::scene() const {
    std::lock_guard lock(scene_mu_);
    return scene_;
}

PortStats Emulator::stats(StreamPort port) const {
    auto it = servers_.find(port);
    return it == servers_.end() ? PortStats{} : it->second->stats();
}

bool Emulator::session_active(StreamPort port) const {
    auto it = servers_.find(port);
    return it != servers_.end() && it->second->active();
}

std::unique_ptr<Emulator> serve(EmulatorConfig config) {
    auto emu = std::make_unique<Emulator>(std::move(config));
    emu->start();
    return emu;
}

}  // namespace hl2ss
