#pragma once

// Mode 2 calibration payloads. Matrices are row-major 4x4 f32. The uv2xy
// lookup table is row-major over pixels with the (x, y) pair innermost:
// value at pixel (u, v) = xy[(v * width + u) * 2 + {0, 1}].

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hl2ss/bytes.hpp"
#include "hl2ss/streams.hpp"

namespace hl2ss {

using Mat4f = std::array<float, 16>;

Mat4f identity_mat4() noexcept;

struct Uv2xyLut {
    int width = 0;
    int height = 0;
    std::vector<float> xy;

    Uv2xyLut() = default;
    Uv2xyLut(int w, int h) : width(w), height(h), xy(static_cast<std::size_t>(w) * h * 2, 0.0f) {}

    float x(int u, int v) const noexcept { return xy[(static_cast<std::size_t>(v) * width + u) * 2]; }
    float y(int u, int v) const noexcept { return xy[(static_cast<std::size_t>(v) * width + u) * 2 + 1]; }
    void set(int u, int v, float x, float y) noexcept {
        const auto i = (static_cast<std::size_t>(v) * width + u) * 2;
        xy[i] = x;
        xy[i + 1] = y;
    }

    std::size_t wire_size() const noexcept { return xy.size() * 4; }
    bool operator==(const Uv2xyLut&) const = default;
};

struct VlcCalibration {
    static constexpr int kWidth = 640;
    static constexpr int kHeight = 480;
    static constexpr std::size_t kWireSize = 480 * 640 * 2 * 4 + 64;

    Uv2xyLut uv2xy{kWidth, kHeight};
    Mat4f extrinsics = identity_mat4();  // sensor -> rigNode

    bool operator==(const VlcCalibration&) const = default;
};

struct DepthCalibration {
    static constexpr int kWidth = 320;
    static constexpr int kHeight = 288;
    static constexpr std::size_t kWireSize = 288 * 320 * 2 * 4 + 64 + 4;

    Uv2xyLut uv2xy{kWidth, kHeight};
    Mat4f extrinsics = identity_mat4();
    float scale = 1000.0f;  // depth units per meter

    bool operator==(const DepthCalibration&) const = default;
};

struct ImuCalibration {
    static constexpr std::size_t kWireSize = 64;

    Mat4f extrinsics = identity_mat4();

    bool operator==(const ImuCalibration&) const = default;
};

/// The projection matrix is carried verbatim; its semantics are not defined
/// by the protocol.
struct PvCalibration {
    static constexpr std::size_t kWireSize = 8 + 8 + 12 + 8 + 64;

    std::array<float, 2> focal{};
    std::array<float, 2> principal{};
    std::array<float, 3> radial{};
    std::array<float, 2> tangential{};
    Mat4f projection{};

    bool operator==(const PvCalibration&) const = default;
};

static_assert(VlcCalibration::kWireSize == 2'457'664);
static_assert(DepthCalibration::kWireSize == 737'348);
static_assert(PvCalibration::kWireSize == 100);

using Calibration = std::variant<VlcCalibration, DepthCalibration, ImuCalibration, PvCalibration>;

/// Blob size for a port's Mode 2 transfer. Throws UnsupportedError for
/// ports without calibration (magnetometer, microphone, spatial input).
std::size_t calibration_size(StreamPort port);

Bytes encode_calibration(const VlcCalibration& c);
Bytes encode_calibration(const DepthCalibration& c);
Bytes encode_calibration(const ImuCalibration& c);
Bytes encode_calibration(const PvCalibration& c);
Bytes encode_calibration(const Calibration& c);

/// Throws ProtocolError on a length mismatch, UnsupportedError for ports
/// without calibration.
Calibration parse_calibration(StreamPort port, ByteView blob);

VlcCalibration parse_vlc_calibration(ByteView blob);
DepthCalibration parse_depth_calibration(ByteView blob);
ImuCalibration parse_imu_calibration(ByteView blob);
PvCalibration parse_pv_calibration(ByteView blob);

/// Human-readable dump (matrices, intrinsics, LUT summary).
std::string describe_calibration(const Calibration& c);

// ---------------------------------------------------------------------------

struct PinholeIntrinsics {
    float fx = 0.0f;
    float fy = 0.0f;
    float cx = 0.0f;
    float cy = 0.0f;

    bool operator==(const PinholeIntrinsics&) const = default;
};

/// uv2xy[v][u] = ((u - cx) / fx, (v - cy) / fy). Throws ValidationError for
/// zero focal lengths or non-positive dimensions.
Uv2xyLut synth_pinhole_lut(int width, int height, const PinholeIntrinsics& k);

VlcCalibration synth_vlc_calibration(const PinholeIntrinsics& k, const Mat4f& extrinsics = identity_mat4());
DepthCalibration synth_depth_calibration(const PinholeIntrinsics& k, const Mat4f& extrinsics = identity_mat4(),
                                         float scale = 1000.0f);
/// Zero distortion; projection is the intrinsics embedded in a 4x4.
PvCalibration synth_pv_calibration(const PinholeIntrinsics& k);

/// Default emulator intrinsics, roughly matching each sensor's field of view.
PinholeIntrinsics default_vlc_intrinsics() noexcept;
PinholeIntrinsics default_depth_intrinsics() noexcept;
PinholeIntrinsics default_pv_intrinsics(int width, int height) noexcept;

}  // namespace hl2ss
