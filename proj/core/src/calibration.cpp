#include "hl2ss/calibration.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "hl2ss/errors.hpp"

namespace hl2ss {

Mat4f identity_mat4() noexcept {
    Mat4f m{};
    m[0] = m[5] = m[10] = m[15] = 1.0f;
    return m;
}

std::size_t calibration_size(StreamPort port) {
    if (is_vlc(port)) return VlcCalibration::kWireSize;
    switch (port) {
        case StreamPort::DEPTH_LONGTHROW: return DepthCalibration::kWireSize;
        case StreamPort::IMU_ACCEL:
        case StreamPort::IMU_GYRO: return ImuCalibration::kWireSize;
        case StreamPort::PV: return PvCalibration::kWireSize;
        case StreamPort::IMU_MAG: throw UnsupportedError("calibration is not available for the magnetometer");
        default:
            throw UnsupportedError(std::string(port_name(port)) + " has no Mode 2 calibration transfer");
    }
}

namespace {

void write_lut(ByteWriter& w, const Uv2xyLut& lut) {
    for (float v : lut.xy) w.f32(v);
}

Uv2xyLut read_lut(ByteReader& r, int width, int height) {
    Uv2xyLut lut(width, height);
    auto raw = r.bytes(lut.wire_size());
    for (std::size_t i = 0; i < lut.xy.size(); ++i) lut.xy[i] = load_f32(raw.data() + 4 * i);
    return lut;
}

void check_lut(const Uv2xyLut& lut, int width, int height) {
    if (lut.width != width || lut.height != height ||
        lut.xy.size() != static_cast<std::size_t>(width) * height * 2) {
        throw ValidationError("uv2xy table must be " + std::to_string(height) + "x" + std::to_string(width) + "x2");
    }
}

void check_length(const char* what, ByteView blob, std::size_t expected) {
    if (blob.size() != expected) {
        throw ProtocolError(std::string(what) + " calibration must be " + std::to_string(expected) +
                            " bytes, got " + std::to_string(blob.size()));
    }
}

}  // namespace

Bytes encode_calibration(const VlcCalibration& c) {
    check_lut(c.uv2xy, VlcCalibration::kWidth, VlcCalibration::kHeight);
    ByteWriter w(VlcCalibration::kWireSize);
    write_lut(w, c.uv2xy);
    w.f32(c.extrinsics);
    return std::move(w).take();
}

Bytes encode_calibration(const DepthCalibration& c) {
    check_lut(c.uv2xy, DepthCalibration::kWidth, DepthCalibration::kHeight);
    ByteWriter w(DepthCalibration::kWireSize);
    write_lut(w, c.uv2xy);
    w.f32(c.extrinsics).f32(c.scale);
    return std::move(w).take();
}

Bytes encode_calibration(const ImuCalibration& c) {
    ByteWriter w(ImuCalibration::kWireSize);
    w.f32(c.extrinsics);
    return std::move(w).take();
}

Bytes encode_calibration(const PvCalibration& c) {
    ByteWriter w(PvCalibration::kWireSize);
    w.f32(c.focal).f32(c.principal).f32(c.radial).f32(c.tangential).f32(c.projection);
    return std::move(w).take();
}

Bytes encode_calibration(const Calibration& c) {
    return std::visit([](const auto& v) { return encode_calibration(v); }, c);
}

VlcCalibration parse_vlc_calibration(ByteView blob) {
    check_length("vlc", blob, VlcCalibration::kWireSize);
    ByteReader r(blob);
    VlcCalibration c;
    c.uv2xy = read_lut(r, VlcCalibration::kWidth, VlcCalibration::kHeight);
    c.extrinsics = r.f32_array<16>();
    return c;
}

DepthCalibration parse_depth_calibration(ByteView blob) {
    check_length("depth", blob, DepthCalibration::kWireSize);
    ByteReader r(blob);
    DepthCalibration c;
    c.uv2xy = read_lut(r, DepthCalibration::kWidth, DepthCalibration::kHeight);
    c.extrinsics = r.f32_array<16>();
    c.scale = r.f32();
    return c;
}

ImuCalibration parse_imu_calibration(ByteView blob) {
    check_length("imu", blob, ImuCalibration::kWireSize);
    ByteReader r(blob);
    return ImuCalibration{r.f32_array<16>()};
}

PvCalibration parse_pv_calibration(ByteView blob) {
    check_length("pv", blob, PvCalibration::kWireSize);
    ByteReader r(blob);
    PvCalibration c;
    c.focal = r.f32_array<2>();
    c.principal = r.f32_array<2>();
    c.radial = r.f32_array<3>();
    c.tangential = r.f32_array<2>();
    c.projection = r.f32_array<16>();
    return c;
}

Calibration parse_calibration(StreamPort port, ByteView blob) {
    (void)calibration_size(port);
    if (is_vlc(port)) return parse_vlc_calibration(blob);
    switch (port) {
        case StreamPort::DEPTH_LONGTHROW: return parse_depth_calibration(blob);
        case StreamPort::PV: return parse_pv_calibration(blob);
        default: return parse_imu_calibration(blob);
    }
}

namespace {

void dump_matrix(std::ostream& os, const char* name, const Mat4f& m) {
    os << name << ":\n";
    for (int r = 0; r < 4; ++r) {
        os << " ";
        for (int c = 0; c < 4; ++c) os << ' ' << std::setw(14) << m[static_cast<std::size_t>(r * 4 + c)];
        os << '\n';
    }
}

template <std::size_t N>
void dump_vector(std::ostream& os, const char* name, const std::array<float, N>& v) {
    os << name << ":";
    for (float x : v) os << ' ' << x;
    os << '\n';
}

void dump_lut(std::ostream& os, const Uv2xyLut& lut) {
    const auto [xmin, xmax] = [&] {
        float lo = 0, hi = 0;
        for (std::size_t i = 0; i < lut.xy.size(); i += 2) {
            lo = i == 0 ? lut.xy[i] : std::min(lo, lut.xy[i]);
            hi = i == 0 ? lut.xy[i] : std::max(hi, lut.xy[i]);
        }
        return std::pair{lo, hi};
    }();
    const auto [ymin, ymax] = [&] {
        float lo = 0, hi = 0;
        for (std::size_t i = 1; i < lut.xy.size(); i += 2) {
            lo = i == 1 ? lut.xy[i] : std::min(lo, lut.xy[i]);
            hi = i == 1 ? lut.xy[i] : std::max(hi, lut.xy[i]);
        }
        return std::pair{lo, hi};
    }();
    os << "uv2xy: " << lut.height << "x" << lut.width << "x2\n";
    os << "  x range: " << xmin << " .. " << xmax << '\n';
    os << "  y range: " << ymin << " .. " << ymax << '\n';
    os << "  center (" << lut.width / 2 << ", " << lut.height / 2 << "): " << lut.x(lut.width / 2, lut.height / 2)
       << ' ' << lut.y(lut.width / 2, lut.height / 2) << '\n';
}

}  // namespace

std::string describe_calibration(const Calibration& c) {
    std::ostringstream os;
    os << std::setprecision(9);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, VlcCalibration>) {
                os << "type: vlc\n";
                dump_lut(os, v.uv2xy);
                dump_matrix(os, "extrinsics", v.extrinsics);
            } else if constexpr (std::is_same_v<T, DepthCalibration>) {
                os << "type: depth_longthrow\n";
                dump_lut(os, v.uv2xy);
                dump_matrix(os, "extrinsics", v.extrinsics);
                os << "scale: " << v.scale << '\n';
            } else if constexpr (std::is_same_v<T, ImuCalibration>) {
                os << "type: imu\n";
                dump_matrix(os, "extrinsics", v.extrinsics);
            } else {
                os << "type: pv\n";
                dump_vector(os, "focal_length", v.focal);
                dump_vector(os, "principal_point", v.principal);
                dump_vector(os, "radial_distortion", v.radial);
                dump_vector(os, "tangential_distortion", v.tangential);
                dump_matrix(os, "projection", v.projection);
            }
        },
        c);
    return os.str();
}

// ---------------------------------------------------------------------------

Uv2xyLut synth_pinhole_lut(int width, int height, const PinholeIntrinsics& k) {
    if (k.fx == 0.0f || k.fy == 0.0f) throw ValidationError("pinhole focal lengths must be nonzero");
    if (width <= 0 || height <= 0) throw ValidationError("lut dimensions must be positive");
    Uv2xyLut lut(width, height);
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            lut.set(u, v, (static_cast<float>(u) - k.cx) / k.fx, (static_cast<float>(v) - k.cy) / k.fy);
        }
    }
    return lut;
}

VlcCalibration synth_vlc_calibration(const PinholeIntrinsics& k, const Mat4f& extrinsics) {
    VlcCalibration c;
    c.uv2xy = synth_pinhole_lut(VlcCalibration::kWidth, VlcCalibration::kHeight, k);
    c.extrinsics = extrinsics;
    return c;
}

DepthCalibration synth_depth_calibration(const PinholeIntrinsics& k, const Mat4f& extrinsics, float scale) {
    if (!(scale > 0.0f)) throw ValidationError("depth scale must be positive");
    DepthCalibration c;
    c.uv2xy = synth_pinhole_lut(DepthCalibration::kWidth, DepthCalibration::kHeight, k);
    c.extrinsics = extrinsics;
    c.scale = scale;
    return c;
}

PvCalibration synth_pv_calibration(const PinholeIntrinsics& k) {
    if (k.fx == 0.0f || k.fy == 0.0f) throw ValidationError("pinhole focal lengths must be nonzero");
    PvCalibration c;
    c.focal = {k.fx, k.fy};
    c.principal = {k.cx, k.cy};
    c.projection = {k.fx, 0, k.cx, 0, 0, k.fy, k.cy, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    return c;
}

PinholeIntrinsics default_vlc_intrinsics() noexcept { return {365.0f, 365.0f, 319.5f, 239.5f}; }

PinholeIntrinsics default_depth_intrinsics() noexcept { return {210.0f, 210.0f, 159.5f, 143.5f}; }

PinholeIntrinsics default_pv_intrinsics(int width, int height) noexcept {
    // ~64 degree horizontal field of view at any resolution.
    const float f = 0.8f * static_cast<float>(width);
    return {f, f, 0.5f * static_cast<float>(width - 1), 0.5f * static_cast<float>(height - 1)};
}

}  // namespace hl2ss
