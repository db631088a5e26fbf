#pragma once

// Stream identities, operating modes, handshake configuration blobs and the
// IMU / Spatial Input payload layouts.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hl2ss/bytes.hpp"

namespace hl2ss {

enum class StreamPort : std::uint16_t {
    VLC_LEFTFRONT = 3800,
    VLC_LEFTLEFT = 3801,
    VLC_RIGHTFRONT = 3802,
    VLC_RIGHTRIGHT = 3803,
    DEPTH_LONGTHROW = 3805,
    IMU_ACCEL = 3806,
    IMU_GYRO = 3807,
    IMU_MAG = 3808,
    CONTROL = 3809,
    PV = 3810,
    MICROPHONE = 3811,
    SPATIAL_INPUT = 3812,
    UNITY_IPC = 3816,
};

enum class StreamMode : std::uint8_t { MODE_0 = 0, MODE_1 = 1, MODE_2 = 2 };

enum class VideoProfile : std::uint8_t { H264_BASE = 0, H264_MAIN = 1, H264_HIGH = 2, H265_MAIN = 3 };

enum class AudioProfile : std::uint8_t { AAC_12000 = 0, AAC_16000 = 1, AAC_20000 = 2, AAC_24000 = 3 };

/// The eleven data-stream ports, in port order.
std::span<const StreamPort> data_stream_ports() noexcept;

/// All thirteen ports a server listens on (data streams + control + IPC).
std::span<const StreamPort> all_server_ports() noexcept;

bool is_data_stream(StreamPort port) noexcept;
bool is_vlc(StreamPort port) noexcept;
bool is_imu(StreamPort port) noexcept;
bool has_video_config(StreamPort port) noexcept;

std::string_view port_name(StreamPort port) noexcept;
std::optional<StreamPort> port_from_number(std::uint16_t number) noexcept;
std::optional<StreamPort> port_from_name(std::string_view name) noexcept;

/// Throws ValidationError for values outside the enumeration.
StreamMode mode_from_int(int value);

/// Operating modes each stream accepts. Throws UnsupportedError for the
/// control and IPC ports.
std::vector<StreamMode> supported_modes(StreamPort port);
bool supports_mode(StreamPort port, StreamMode mode);

// ---------------------------------------------------------------------------
// Configuration blobs sent by the client right after connecting.

struct VideoConfig {
    StreamMode mode = StreamMode::MODE_0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint8_t framerate = 0;
    VideoProfile profile = VideoProfile::H264_MAIN;
    std::uint32_t bitrate = 0;

    bool operator==(const VideoConfig&) const = default;
};

/// Depth and IMU streams only send the mode byte.
struct ModeConfig {
    StreamMode mode = StreamMode::MODE_0;
    bool operator==(const ModeConfig&) const = default;
};

struct AudioConfig {
    AudioProfile profile = AudioProfile::AAC_24000;
    bool operator==(const AudioConfig&) const = default;
};

/// Spatial Input has no handshake.
struct NoConfig {
    bool operator==(const NoConfig&) const = default;
};

using StreamConfig = std::variant<VideoConfig, ModeConfig, AudioConfig, NoConfig>;

inline constexpr std::size_t kVideoConfigSize = 11;

inline constexpr std::uint16_t kVlcWidth = 640;
inline constexpr std::uint16_t kVlcHeight = 480;
inline constexpr std::uint8_t kVlcFramerate = 30;

/// Accepted (width, height, framerate) triples for the PV camera.
///
/// The default list is a stand-in for the device's video-conferencing
/// profile, not a statement about real hardware. Files hold one `WxH@FPS`
/// entry per line; blank lines and `#` comments are ignored.
class PvModeWhitelist {
public:
    struct Entry {
        std::uint16_t width;
        std::uint16_t height;
        std::uint8_t framerate;
        bool operator==(const Entry&) const = default;
    };

    PvModeWhitelist() : PvModeWhitelist(defaults()) {}
    explicit PvModeWhitelist(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    static std::vector<Entry> defaults();
    static PvModeWhitelist parse(std::string_view text);
    static PvModeWhitelist load(const std::filesystem::path& path);

    bool accepts(std::uint16_t width, std::uint16_t height, std::uint8_t framerate) const noexcept;
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::string to_text() const;

private:
    std::vector<Entry> entries_;
};

/// Mode carried by a configuration (Microphone and Spatial Input are Mode 0).
StreamMode config_mode(const StreamConfig& cfg) noexcept;

/// Checks the configuration against the port's rules (type, mode support,
/// VLC fixed geometry, PV whitelist). Throws ValidationError.
void validate_config(StreamPort port, const StreamConfig& cfg,
                     const PvModeWhitelist& pv_modes = PvModeWhitelist());

/// Validates then serializes the handshake blob.
Bytes encode_config(StreamPort port, const StreamConfig& cfg,
                    const PvModeWhitelist& pv_modes = PvModeWhitelist());

/// Number of handshake bytes the server expects. For the PV stream every
/// mode, including Mode 2, requires the full video string.
std::size_t config_size(StreamPort port) noexcept;

/// Server-side inverse of encode_config. Does not validate semantics beyond
/// the enumeration ranges; call validate_config for that.
StreamConfig decode_config(StreamPort port, ByteView blob);

/// Throws UnsupportedError if the port does not offer `mode`.
StreamConfig default_config(StreamPort port, StreamMode mode = StreamMode::MODE_0);

// ---------------------------------------------------------------------------
// IMU

struct ImuSample {
    std::uint64_t sensor_timestamp_ns = 0;
    std::uint64_t frame_timestamp = 0;
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;

    static constexpr std::size_t kWireSize = 28;
    bool operator==(const ImuSample&) const = default;
};

inline constexpr std::size_t kAccelBatchSize = 93;
inline constexpr std::size_t kGyroBatchSize = 315;
inline constexpr std::size_t kMagBatchSize = 11;

/// Samples per frame for an IMU port; throws UnsupportedError otherwise.
std::size_t imu_batch_size(StreamPort port);

Bytes pack_imu_batch(std::span<const ImuSample> samples, StreamPort port);
std::vector<ImuSample> unpack_imu_batch(ByteView payload, StreamPort port);

// ---------------------------------------------------------------------------
// Spatial Input

using Vec3f = std::array<float, 3>;
using Vec4f = std::array<float, 4>;

struct HeadPose {
    Vec3f position{};
    Vec3f forward{};
    Vec3f up{};

    static constexpr std::size_t kWireSize = 36;
    /// cross(up, -forward)
    Vec3f right() const noexcept;
    bool operator==(const HeadPose&) const = default;
};

struct EyeRay {
    Vec3f origin{};
    Vec3f direction{};

    static constexpr std::size_t kWireSize = 24;
    bool operator==(const EyeRay&) const = default;
};

struct HandJoint {
    Vec4f orientation{};  // quaternion x, y, z, w
    Vec3f position{};
    float radius = 0.0f;
    std::uint32_t accuracy = 0;

    static constexpr std::size_t kWireSize = 36;
    bool operator==(const HandJoint&) const = default;
};

inline constexpr std::size_t kHandJointCount = 26;

struct Hand {
    std::array<HandJoint, kHandJointCount> joints{};

    static constexpr std::size_t kWireSize = kHandJointCount * HandJoint::kWireSize;
    bool operator==(const Hand&) const = default;
};

struct SpatialInputFrame {
    enum ValidBits : std::uint8_t { HEAD = 1u << 0, EYE = 1u << 1, LEFT_HAND = 1u << 2, RIGHT_HAND = 1u << 3 };

    std::uint8_t valid = 0;
    HeadPose head;
    EyeRay eye;
    Hand left;
    Hand right;

    static constexpr std::size_t kWireSize =
        1 + HeadPose::kWireSize + EyeRay::kWireSize + 2 * Hand::kWireSize;

    bool head_valid() const noexcept { return valid & HEAD; }
    bool eye_valid() const noexcept { return valid & EYE; }
    bool left_valid() const noexcept { return valid & LEFT_HAND; }
    bool right_valid() const noexcept { return valid & RIGHT_HAND; }

    bool operator==(const SpatialInputFrame&) const = default;
};

static_assert(SpatialInputFrame::kWireSize == 1933);
static_assert(Hand::kWireSize == 936);

/// Fields whose valid bit is clear are written as zeros.
Bytes pack_spatial_input(const SpatialInputFrame& frame);
SpatialInputFrame unpack_spatial_input(ByteView payload);

}  // namespace hl2ss
