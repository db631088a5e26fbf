#include "hl2ss/streams.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hl2ss/errors.hpp"

namespace hl2ss {

namespace {

constexpr std::array kDataPorts{
    StreamPort::VLC_LEFTFRONT, StreamPort::VLC_LEFTLEFT,   StreamPort::VLC_RIGHTFRONT,
    StreamPort::VLC_RIGHTRIGHT, StreamPort::DEPTH_LONGTHROW, StreamPort::IMU_ACCEL,
    StreamPort::IMU_GYRO,      StreamPort::IMU_MAG,        StreamPort::PV,
    StreamPort::MICROPHONE,    StreamPort::SPATIAL_INPUT,
};

constexpr std::array kServerPorts{
    StreamPort::VLC_LEFTFRONT, StreamPort::VLC_LEFTLEFT,    StreamPort::VLC_RIGHTFRONT,
    StreamPort::VLC_RIGHTRIGHT, StreamPort::DEPTH_LONGTHROW, StreamPort::IMU_ACCEL,
    StreamPort::IMU_GYRO,      StreamPort::IMU_MAG,         StreamPort::CONTROL,
    StreamPort::PV,            StreamPort::MICROPHONE,      StreamPort::SPATIAL_INPUT,
    StreamPort::UNITY_IPC,
};

struct PortName {
    StreamPort port;
    std::string_view name;
};

constexpr std::array kPortNames{
    PortName{StreamPort::VLC_LEFTFRONT, "vlc_leftfront"},
    PortName{StreamPort::VLC_LEFTLEFT, "vlc_leftleft"},
    PortName{StreamPort::VLC_RIGHTFRONT, "vlc_rightfront"},
    PortName{StreamPort::VLC_RIGHTRIGHT, "vlc_rightright"},
    PortName{StreamPort::DEPTH_LONGTHROW, "depth_longthrow"},
    PortName{StreamPort::IMU_ACCEL, "imu_accel"},
    PortName{StreamPort::IMU_GYRO, "imu_gyro"},
    PortName{StreamPort::IMU_MAG, "imu_mag"},
    PortName{StreamPort::CONTROL, "control"},
    PortName{StreamPort::PV, "pv"},
    PortName{StreamPort::MICROPHONE, "microphone"},
    PortName{StreamPort::SPATIAL_INPUT, "spatial_input"},
    PortName{StreamPort::UNITY_IPC, "unity_ipc"},
};

std::string describe(StreamPort port) {
    return std::string(port_name(port)) + " (" + std::to_string(static_cast<int>(port)) + ")";
}

}  // namespace

std::span<const StreamPort> data_stream_ports() noexcept { return kDataPorts; }
std::span<const StreamPort> all_server_ports() noexcept { return kServerPorts; }

bool is_data_stream(StreamPort port) noexcept {
    return std::find(kDataPorts.begin(), kDataPorts.end(), port) != kDataPorts.end();
}

bool is_vlc(StreamPort port) noexcept {
    return port == StreamPort::VLC_LEFTFRONT || port == StreamPort::VLC_LEFTLEFT ||
           port == StreamPort::VLC_RIGHTFRONT || port == StreamPort::VLC_RIGHTRIGHT;
}

bool is_imu(StreamPort port) noexcept {
    return port == StreamPort::IMU_ACCEL || port == StreamPort::IMU_GYRO || port == StreamPort::IMU_MAG;
}

bool has_video_config(StreamPort port) noexcept { return is_vlc(port) || port == StreamPort::PV; }

std::string_view port_name(StreamPort port) noexcept {
    for (const auto& e : kPortNames) {
        if (e.port == port) return e.name;
    }
    return "unknown";
}

std::optional<StreamPort> port_from_number(std::uint16_t number) noexcept {
    for (auto p : kServerPorts) {
        if (static_cast<std::uint16_t>(p) == number) return p;
    }
    return std::nullopt;
}

std::optional<StreamPort> port_from_name(std::string_view name) noexcept {
    for (const auto& e : kPortNames) {
        if (e.name == name) return e.port;
    }
    std::uint16_t number = 0;
    auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), number);
    if (ec == std::errc{} && ptr == name.data() + name.size()) return port_from_number(number);
    return std::nullopt;
}

StreamMode mode_from_int(int value) {
    if (value < 0 || value > 2) throw ValidationError("stream mode must be 0, 1 or 2, got " + std::to_string(value));
    return static_cast<StreamMode>(value);
}

std::vector<StreamMode> supported_modes(StreamPort port) {
    using enum StreamMode;
    switch (port) {
        case StreamPort::VLC_LEFTFRONT:
        case StreamPort::VLC_LEFTLEFT:
        case StreamPort::VLC_RIGHTFRONT:
        case StreamPort::VLC_RIGHTRIGHT:
        case StreamPort::DEPTH_LONGTHROW:
        case StreamPort::IMU_ACCEL:
        case StreamPort::IMU_GYRO:
        case StreamPort::PV:
            return {MODE_0, MODE_1, MODE_2};
        case StreamPort::IMU_MAG:
            return {MODE_0, MODE_1};
        case StreamPort::MICROPHONE:
        case StreamPort::SPATIAL_INPUT:
            return {MODE_0};
        case StreamPort::CONTROL:
        case StreamPort::UNITY_IPC:
            break;
    }
    throw UnsupportedError(describe(port) + " is not a data stream");
}

bool supports_mode(StreamPort port, StreamMode mode) {
    const auto modes = supported_modes(port);
    return std::find(modes.begin(), modes.end(), mode) != modes.end();
}

// ---------------------------------------------------------------------------

std::vector<PvModeWhitelist::Entry> PvModeWhitelist::defaults() {
    std::vector<Entry> out;
    for (auto [w, h] : {std::pair<std::uint16_t, std::uint16_t>{1920, 1080}, {1280, 720}, {640, 360}}) {
        for (std::uint8_t fps : {std::uint8_t{15}, std::uint8_t{30}}) out.push_back({w, h, fps});
    }
    return out;
}

PvModeWhitelist PvModeWhitelist::parse(std::string_view text) {
    std::vector<Entry> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
                   line.end());
        if (line.empty()) continue;
        unsigned w = 0, h = 0, fps = 0;
        char x = 0, at = 0;
        std::istringstream fields(line);
        fields >> w >> x >> h >> at >> fps;
        if (!fields || x != 'x' || at != '@' || !fields.eof() || w == 0 || h == 0 || fps == 0 ||
            w > UINT16_MAX || h > UINT16_MAX || fps > UINT8_MAX) {
            throw ValidationError("pv whitelist line " + std::to_string(lineno) + ": expected WxH@FPS, got '" +
                                  line + "'");
        }
        entries.push_back({static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(h),
                           static_cast<std::uint8_t>(fps)});
    }
    return PvModeWhitelist(std::move(entries));
}

PvModeWhitelist PvModeWhitelist::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pv whitelist " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool PvModeWhitelist::accepts(std::uint16_t width, std::uint16_t height, std::uint8_t framerate) const noexcept {
    return std::find(entries_.begin(), entries_.end(), Entry{width, height, framerate}) != entries_.end();
}

std::string PvModeWhitelist::to_text() const {
    std::string out;
    for (const auto& e : entries_) {
        out += std::to_string(e.width) + "x" + std::to_string(e.height) + "@" + std::to_string(e.framerate) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------

StreamMode config_mode(const StreamConfig& cfg) noexcept {
    if (auto v = std::get_if<VideoConfig>(&cfg)) return v->mode;
    if (auto m = std::get_if<ModeConfig>(&cfg)) return m->mode;
    return StreamMode::MODE_0;
}

void validate_config(StreamPort port, const StreamConfig& cfg, const PvModeWhitelist& pv_modes) {
    if (!is_data_stream(port)) throw UnsupportedError(describe(port) + " is not a data stream");

    auto require_type = [&](bool ok, const char* expected) {
        if (!ok) throw ValidationError(describe(port) + " expects a " + expected);
    };

    if (has_video_config(port)) {
        require_type(std::holds_alternative<VideoConfig>(cfg), "VideoConfig");
        const auto& v = std::get<VideoConfig>(cfg);
        if (static_cast<std::uint8_t>(v.profile) > 3) throw ValidationError("video profile must be 0..3");
        if (is_vlc(port) && (v.width != kVlcWidth || v.height != kVlcHeight || v.framerate != kVlcFramerate)) {
            throw ValidationError(describe(port) + ": width, height and framerate must be 640, 480 and 30, got " +
                                  std::to_string(v.width) + "x" + std::to_string(v.height) + "@" +
                                  std::to_string(v.framerate));
        }
        if (port == StreamPort::PV && !pv_modes.accepts(v.width, v.height, v.framerate)) {
            throw ValidationError("pv: " + std::to_string(v.width) + "x" + std::to_string(v.height) + "@" +
                                  std::to_string(v.framerate) + " is not an accepted camera mode");
        }
    } else if (port == StreamPort::MICROPHONE) {
        require_type(std::holds_alternative<AudioConfig>(cfg), "AudioConfig");
        if (static_cast<std::uint8_t>(std::get<AudioConfig>(cfg).profile) > 3) {
            throw ValidationError("audio preset must be 0..3");
        }
    } else if (port == StreamPort::SPATIAL_INPUT) {
        require_type(std::holds_alternative<NoConfig>(cfg), "NoConfig");
    } else {
        require_type(std::holds_alternative<ModeConfig>(cfg), "ModeConfig");
    }

    const StreamMode mode = config_mode(cfg);
    if (static_cast<std::uint8_t>(mode) > 2 || !supports_mode(port, mode)) {
        throw UnsupportedError(describe(port) + " does not support mode " +
                               std::to_string(static_cast<int>(mode)));
    }
}

Bytes encode_config(StreamPort port, const StreamConfig& cfg, const PvModeWhitelist& pv_modes) {
    validate_config(port, cfg, pv_modes);
    ByteWriter w(kVideoConfigSize);
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, VideoConfig>) {
                w.u8(static_cast<std::uint8_t>(c.mode))
                    .u16(c.width)
                    .u16(c.height)
                    .u8(c.framerate)
                    .u8(static_cast<std::uint8_t>(c.profile))
                    .u32(c.bitrate);
            } else if constexpr (std::is_same_v<T, ModeConfig>) {
                w.u8(static_cast<std::uint8_t>(c.mode));
            } else if constexpr (std::is_same_v<T, AudioConfig>) {
                w.u8(static_cast<std::uint8_t>(c.profile));
            }
        },
        cfg);
    return std::move(w).take();
}

std::size_t config_size(StreamPort port) noexcept {
    if (has_video_config(port)) return kVideoConfigSize;
    if (port == StreamPort::SPATIAL_INPUT || !is_data_stream(port)) return 0;
    return 1;
}

StreamConfig decode_config(StreamPort port, ByteView blob) {
    if (!is_data_stream(port)) throw UnsupportedError(describe(port) + " is not a data stream");
    if (blob.size() != config_size(port)) {
        throw ProtocolError(describe(port) + ": config blob must be " + std::to_string(config_size(port)) +
                            " bytes, got " + std::to_string(blob.size()));
    }
    ByteReader r(blob);
    auto read_mode = [&] {
        const auto m = r.u8();
        if (m > 2) throw ProtocolError("invalid stream mode byte " + std::to_string(m));
        return static_cast<StreamMode>(m);
    };
    if (has_video_config(port)) {
        VideoConfig v;
        v.mode = read_mode();
        v.width = r.u16();
        v.height = r.u16();
        v.framerate = r.u8();
        const auto profile = r.u8();
        if (profile > 3) throw ProtocolError("invalid video profile byte " + std::to_string(profile));
        v.profile = static_cast<VideoProfile>(profile);
        v.bitrate = r.u32();
        return v;
    }
    if (port == StreamPort::MICROPHONE) {
        const auto preset = r.u8();
        if (preset > 3) throw ProtocolError("invalid audio preset byte " + std::to_string(preset));
        return AudioConfig{static_cast<AudioProfile>(preset)};
    }
    if (port == StreamPort::SPATIAL_INPUT) return NoConfig{};
    return ModeConfig{read_mode()};
}

StreamConfig default_config(StreamPort port, StreamMode mode) {
    if (is_data_stream(port) && !supports_mode(port, mode)) {
        throw UnsupportedError(describe(port) + " does not support mode " + std::to_string(static_cast<int>(mode)));
    }
    if (is_vlc(port)) {
        return VideoConfig{mode, kVlcWidth, kVlcHeight, kVlcFramerate, VideoProfile::H264_MAIN, 1u << 20};
    }
    switch (port) {
        case StreamPort::PV: return VideoConfig{mode, 1920, 1080, 30, VideoProfile::H265_MAIN, 5u << 20};
        case StreamPort::MICROPHONE: return AudioConfig{AudioProfile::AAC_24000};
        case StreamPort::SPATIAL_INPUT: return NoConfig{};
        case StreamPort::CONTROL:
        case StreamPort::UNITY_IPC: throw UnsupportedError(describe(port) + " is not a data stream");
        default: return ModeConfig{mode};
    }
}

// ---------------------------------------------------------------------------

std::size_t imu_batch_size(StreamPort port) {
    switch (port) {
        case StreamPort::IMU_ACCEL: return kAccelBatchSize;
        case StreamPort::IMU_GYRO: return kGyroBatchSize;
        case StreamPort::IMU_MAG: return kMagBatchSize;
        default: throw UnsupportedError(describe(port) + " is not an IMU stream");
    }
}

Bytes pack_imu_batch(std::span<const ImuSample> samples, StreamPort port) {
    const std::size_t expected = imu_batch_size(port);
    if (samples.size() != expected) {
        throw ProtocolError(describe(port) + ": batch must hold " + std::to_string(expected) + " samples, got " +
                            std::to_string(samples.size()));
    }
    ByteWriter w(expected * ImuSample::kWireSize);
    for (const auto& s : samples) {
        w.u64(s.sensor_timestamp_ns).u64(s.frame_timestamp).f32(s.x).f32(s.y).f32(s.z);
    }
    return std::move(w).take();
}

std::vector<ImuSample> unpack_imu_batch(ByteView payload, StreamPort port) {
    const std::size_t expected = imu_batch_size(port);
    if (payload.size() != expected * ImuSample::kWireSize) {
        throw ProtocolError(describe(port) + ": batch payload must be " +
                            std::to_string(expected * ImuSample::kWireSize) + " bytes, got " +
                            std::to_string(payload.size()));
    }
    std::vector<ImuSample> out(expected);
    ByteReader r(payload);
    for (auto& s : out) {
        s.sensor_timestamp_ns = r.u64();
        s.frame_timestamp = r.u64();
        s.x = r.f32();
        s.y = r.f32();
        s.z = r.f32();
    }
    return out;
}

// ---------------------------------------------------------------------------

Vec3f HeadPose::right() const noexcept {
    const Vec3f b{-forward[0], -forward[1], -forward[2]};
    return {up[1] * b[2] - up[2] * b[1], up[2] * b[0] - up[0] * b[2], up[0] * b[1] - up[1] * b[0]};
}

namespace {

void write_hand(ByteWriter& w, const Hand& hand) {
    for (const auto& j : hand.joints) w.f32(j.orientation).f32(j.position).f32(j.radius).u32(j.accuracy);
}

Hand read_hand(ByteReader& r) {
    Hand hand;
    for (auto& j : hand.joints) {
        j.orientation = r.f32_array<4>();
        j.position = r.f32_array<3>();
        j.radius = r.f32();
        j.accuracy = r.u32();
    }
    return hand;
}

}  // namespace

Bytes pack_spatial_input(const SpatialInputFrame& f) {
    ByteWriter w(SpatialInputFrame::kWireSize);
    w.u8(f.valid & 0x0F);
    if (f.head_valid()) {
        w.f32(f.head.position).f32(f.head.forward).f32(f.head.up);
    } else {
        w.zeros(HeadPose::kWireSize);
    }
    if (f.eye_valid()) {
        w.f32(f.eye.origin).f32(f.eye.direction);
    } else {
        w.zeros(EyeRay::kWireSize);
    }
    f.left_valid() ? write_hand(w, f.left) : (void)w.zeros(Hand::kWireSize);
    f.right_valid() ? write_hand(w, f.right) : (void)w.zeros(Hand::kWireSize);
    return std::move(w).take();
}

SpatialInputFrame unpack_spatial_input(ByteView payload) {
    if (payload.size() != SpatialInputFrame::kWireSize) {
        throw ProtocolError("spatial input payload must be " + std::to_string(SpatialInputFrame::kWireSize) +
                            " bytes, got " + std::to_string(payload.size()));
    }
    ByteReader r(payload);
    SpatialInputFrame f;
    f.valid = r.u8();
    f.head.position = r.f32_array<3>();
    f.head.forward = r.f32_array<3>();
    f.head.up = r.f32_array<3>();
    f.eye.origin = r.f32_array<3>();
    f.eye.direction = r.f32_array<3>();
    f.left = read_hand(r);
    f.right = read_hand(r);
    return f;
}

}  // namespace hl2ss
