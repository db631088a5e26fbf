#pragma once

// Device emulator: serves every stream port plus the remote configuration
// and IPC ports with synthetic data in the exact wire formats.
//
// Timestamps come from a synthetic clock that may run faster than wall time
// (clock_multiplier). Frame k of a session is stamped
// t0 + round(k * period) in simulated ticks, and is sent when the wall clock
// reaches the matching instant.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hl2ss/calibration.hpp"
#include "hl2ss/codecs.hpp"
#include "hl2ss/control.hpp"
#include "hl2ss/net.hpp"
#include "hl2ss/scene.hpp"
#include "hl2ss/streams.hpp"
#include "hl2ss/wire.hpp"

namespace hl2ss {

/// Frames per second as a ratio (48000 / 1024 for audio).
struct Rate {
    std::uint64_t num = 1;
    std::uint64_t den = 1;

    double fps() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rate&) const = default;
};

/// round(index * 1e7 * den / num), the tick offset of frame `index`.
std::uint64_t frame_offset_ticks(std::uint64_t index, const Rate& rate) noexcept;

/// Simulated-time interval [start, end) in seconds since the clock origin
/// during which Mode 1 poses are reported invalid.
struct TrackingLossInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    bool operator==(const TrackingLossInterval&) const = default;
};

struct StreamRates {
    std::uint32_t vlc = 30;
    std::uint32_t depth = 5;  // 1..5
    std::uint32_t imu_accel = 12;
    std::uint32_t imu_gyro = 21;
    std::uint32_t imu_mag = 5;
    std::uint32_t spatial_input = 60;
    bool operator==(const StreamRates&) const = default;
};

struct EmulatorConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port_offset = 0;
    double clock_multiplier = 1.0;
    std::uint64_t clock_origin_ticks = 1'000'000'000;
    StreamRates rates;
    PvModeWhitelist pv_modes;
    std::vector<TrackingLossInterval> tracking_loss;
    ServerVersion version{1, 0, 0, 0};
    net::Duration handshake_timeout{2000};
    int png_compression_level = 1;

    /// Called with every frame just before it is sent.
    std::function<void(StreamPort, const DataFrame&)> on_frame;
    /// Replaces the synthetic payload of frame `index` when set.
    std::function<Bytes(StreamPort, std::uint64_t index)> payload_source;
};

/// Throws ValidationError on unknown keys or out-of-range values.
EmulatorConfig parse_emulator_config(std::string_view json_text,
                                     const std::filesystem::path& base_dir = std::filesystem::path());
EmulatorConfig load_emulator_config(const std::filesystem::path& path);

/// Frame rate of a data stream under this configuration.
Rate stream_rate(StreamPort port, const EmulatorConfig& config, const StreamConfig& stream_config);

/// Settings written through the remote configuration port.
struct DeviceSettings {
    bool marker_enabled = false;
    SetFocus focus;
    std::uint32_t temporal_denoising = 0;
    std::uint32_t white_balance_preset = 0;
    std::uint32_t white_balance_value = 0;  // natural units
    std::uint32_t exposure_mode = 0;
    std::uint32_t exposure_value = 0;  // natural units

    bool operator==(const DeviceSettings&) const = default;
};

/// Applies a decoded control command. Returns the reply bytes (GetVersion
/// only).
std::optional<Bytes> apply_control(DeviceSettings& settings, const ControlCommand& cmd, const ServerVersion& version);

// ---------------------------------------------------------------------------
// Procedural device model. All generators are pure functions of their
// arguments so tests can regenerate expected data.

namespace synth {

/// Head path: 1 m radius circle at 1.6 m height, one lap per 10 s, facing
/// along the direction of travel. Row-major rigid transform.
Pose trajectory(std::uint64_t sim_ticks_since_origin);

bool tracking_lost(const std::vector<TrackingLossInterval>& schedule, std::uint64_t sim_ticks_since_origin);

/// Mode 1 pose trailer for a frame stamped `ts`.
Pose frame_pose(const EmulatorConfig& config, Timestamp ts);

GrayImage vlc_image(StreamPort port, std::uint64_t index);
ColorImage pv_image(int width, int height, std::uint64_t index, bool marker);

struct DepthFrame {
    DepthAbImage image;
    SigmaMask sigma;
};
DepthFrame depth_frame(std::uint64_t index);

AudioFrame audio_frame(std::uint64_t index);
std::vector<ImuSample> imu_batch(StreamPort port, std::uint64_t index, Timestamp ts, const Rate& rate);
SpatialInputFrame spatial_input(Timestamp ts, std::uint64_t origin_ticks, std::uint64_t index);

/// Per-sensor synthetic calibration. PV intrinsics follow the requested
/// resolution.
Calibration calibration(StreamPort port, const VideoConfig* pv_config = nullptr);

}  // namespace synth

/// Synthetic payload for frame `index` of a session.
Bytes synth_payload(StreamPort port, const StreamConfig& stream_config, std::uint64_t index, Timestamp ts,
                    const EmulatorConfig& config, const DeviceSettings& settings);

// ---------------------------------------------------------------------------

struct PortStats {
    std::uint64_t sessions = 0;
    std::uint64_t rejected = 0;  // second connections closed on accept
    std::uint64_t handshake_failures = 0;
    std::uint64_t frames_sent = 0;
};

class Emulator {
public:
    explicit Emulator(EmulatorConfig config);
    ~Emulator();

    Emulator(const Emulator&) = delete;
    Emulator& operator=(const Emulator&) = delete;

    /// Binds all thirteen ports. Throws TransportError naming the first port
    /// that fails; nothing stays bound in that case.
    void start();
    void stop() noexcept;
    bool running() const noexcept { return running_.load(); }

    const EmulatorConfig& config() const noexcept { return config_; }

    /// Current simulated time.
    Timestamp now() const noexcept;
    /// Wall-clock instant at which simulated time `ts` is reached.
    std::chrono::steady_clock::time_point wall_time(Timestamp ts) const noexcept;

    DeviceSettings settings() const;
    SceneState scene() const;
    PortStats stats(StreamPort port) const;
    bool session_active(StreamPort port) const;

private:
    class PortServer;
    friend class PortServer;

    void set_settings(const DeviceSettings& s);

    EmulatorConfig config_;
    std::atomic<bool> running_{false};
    std::chrono::steady_clock::time_point wall_origin_;

    mutable std::mutex settings_mu_;
    DeviceSettings settings_;
    mutable std::mutex scene_mu_;
    SceneState scene_;

    std::map<StreamPort, std::unique_ptr<PortServer>> servers_;
};

/// Constructs and starts an emulator.
std::unique_ptr<Emulator> serve(EmulatorConfig config);

}  // namespace hl2ss
