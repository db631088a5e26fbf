#include "hl2ss/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "hl2ss/errors.hpp"

namespace hl2ss {

RigidTransform RigidTransform::from_row_major(const std::array<float, 16>& m) {
    Eigen::Matrix4f e;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) e(r, c) = m[static_cast<std::size_t>(r * 4 + c)];
    return RigidTransform(e);
}

RigidTransform RigidTransform::translation(float x, float y, float z) {
    Eigen::Matrix4f e = Eigen::Matrix4f::Identity();
    e.topRightCorner<3, 1>() << x, y, z;
    return RigidTransform(e);
}

RigidTransform RigidTransform::from_rotation_translation(const Eigen::Matrix3f& r, const Eigen::Vector3f& t) {
    Eigen::Matrix4f e = Eigen::Matrix4f::Identity();
    e.topLeftCorner<3, 3>() = r;
    e.topRightCorner<3, 1>() = t;
    return RigidTransform(e);
}

std::array<float, 16> RigidTransform::row_major() const {
    std::array<float, 16> out{};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r * 4 + c)] = m_(r, c);
    return out;
}

RigidTransform RigidTransform::inverse() const {
    const Eigen::Matrix3f rt = rotation().transpose();
    return from_rotation_translation(rt, -(rt * translation()));
}

bool RigidTransform::is_rigid(float tolerance) const {
    const Eigen::Matrix3f r = rotation();
    if ((r * r.transpose() - Eigen::Matrix3f::Identity()).cwiseAbs().maxCoeff() > tolerance) return false;
    return m_(3, 0) == 0.0f && m_(3, 1) == 0.0f && m_(3, 2) == 0.0f && m_(3, 3) == 1.0f;
}

// ---------------------------------------------------------------------------

namespace {

void check_depth_inputs(const DepthAbImage& img, const DepthCalibration& cal) {
    if (img.depth.size() != kDepthPixels) throw ValidationError("depth image must be 320x288");
    if (cal.uv2xy.width != kDepthWidth || cal.uv2xy.height != kDepthHeight ||
        cal.uv2xy.xy.size() != kDepthPixels * 2) {
        throw ValidationError("depth calibration LUT must be 320x288");
    }
    if (!(cal.scale > 0.0f)) throw ValidationError("depth scale must be positive");
}

}  // namespace

PointCloud depth_to_points(const DepthAbImage& img, const DepthCalibration& cal) {
    check_depth_inputs(img, cal);
    PointCloud pc;
    pc.points.reserve(static_cast<std::size_t>(std::count_if(img.depth.begin(), img.depth.end(),
                                                             [](std::uint16_t d) { return d != 0; })));
    const float inv_scale = 1.0f / cal.scale;
    for (std::size_t i = 0; i < kDepthPixels; ++i) {
        const std::uint16_t d = img.depth[i];
        if (!d) continue;
        const float z = static_cast<float>(d) * inv_scale;
        pc.points.emplace_back(cal.uv2xy.xy[2 * i] * z, cal.uv2xy.xy[2 * i + 1] * z, z);
    }
    return pc;
}

PointCloud transform_points(const PointCloud& pc, const RigidTransform& t) {
    PointCloud out;
    out.colors = pc.colors;
    out.points.reserve(pc.points.size());
    const Eigen::Matrix3f r = t.rotation();
    const Eigen::Vector3f tr = t.translation();
    for (const auto& p : pc.points) out.points.emplace_back(r * p + tr);
    return out;
}

Eigen::Vector2d distort_brown_conrady(const Eigen::Vector2d& xy, const std::array<float, 3>& k,
                                      const std::array<float, 2>& p) {
    const double x = xy.x(), y = xy.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k[0] + r2 * (k[1] + r2 * k[2]));
    const double xd = x * radial + 2.0 * p[0] * x * y + p[1] * (r2 + 2.0 * x * x);
    const double yd = y * radial + p[0] * (r2 + 2.0 * y * y) + 2.0 * p[1] * x * y;
    return {xd, yd};
}

Eigen::Vector2f project_pv(const Eigen::Vector3f& point, const PvCalibration& cal) {
    if (!(point.z() > 0.0f)) throw ValidationError("point is behind the camera (z <= 0)");
    const Eigen::Vector2d n(static_cast<double>(point.x()) / point.z(), static_cast<double>(point.y()) / point.z());
    const Eigen::Vector2d d = distort_brown_conrady(n, cal.radial, cal.tangential);
    return {static_cast<float>(cal.focal[0] * d.x() + cal.principal[0]),
            static_cast<float>(cal.focal[1] * d.y() + cal.principal[1])};
}

// ---------------------------------------------------------------------------
// LutInverse

LutInverse::LutInverse(const Uv2xyLut& lut) : lut_(lut) {
    if (lut_.width < 2 || lut_.height < 2 ||
        lut_.xy.size() != static_cast<std::size_t>(lut_.width) * lut_.height * 2) {
        throw ValidationError("uv2xy table is missing or malformed");
    }
    double x1 = -std::numeric_limits<double>::infinity(), y1 = x1;
    x0_ = y0_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lut_.xy.size(); i += 2) {
        const double x = lut_.xy[i], y = lut_.xy[i + 1];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        x0_ = std::min(x0_, x);
        x1 = std::max(x1, x);
        y0_ = std::min(y0_, y);
        y1 = std::max(y1, y);
    }
    if (!(x1 > x0_) || !(y1 > y0_)) throw ValidationError("uv2xy table is degenerate");

    grid_w_ = lut_.width;
    grid_h_ = lut_.height;
    cell_w_ = (x1 - x0_) / grid_w_;
    cell_h_ = (y1 - y0_) / grid_h_;
    grid_.assign(static_cast<std::size_t>(grid_w_) * grid_h_, -1);

    std::vector<double> best(grid_.size(), std::numeric_limits<double>::infinity());
    for (int v = 0; v < lut_.height; ++v) {
        for (int u = 0; u < lut_.width; ++u) {
            const double x = lut_.x(u, v), y = lut_.y(u, v);
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            const int gx = std::clamp(static_cast<int>((x - x0_) / cell_w_), 0, grid_w_ - 1);
            const int gy = std::clamp(static_cast<int>((y - y0_) / cell_h_), 0, grid_h_ - 1);
            const double dx = x - (x0_ + (gx + 0.5) * cell_w_);
            const double dy = y - (y0_ + (gy + 0.5) * cell_h_);
            const auto cell = static_cast<std::size_t>(gy) * grid_w_ + gx;
            if (dx * dx + dy * dy < best[cell]) {
                best[cell] = dx * dx + dy * dy;
                grid_[cell] = v * lut_.width + u;
            }
        }
    }
}

Eigen::Vector2d LutInverse::sample(double u, double v, Eigen::Matrix2d* jacobian) const {
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, lut_.width - 2);
    const int j = std::clamp(static_cast<int>(std::floor(v)), 0, lut_.height - 2);
    const double fu = u - i, fv = v - j;
    auto at = [&](int a, int b) { return Eigen::Vector2d(lut_.x(a, b), lut_.y(a, b)); };
    const Eigen::Vector2d p00 = at(i, j), p10 = at(i + 1, j), p01 = at(i, j + 1), p11 = at(i + 1, j + 1);
    if (jacobian) {
        jacobian->col(0) = (1 - fv) * (p10 - p00) + fv * (p11 - p01);
        jacobian->col(1) = (1 - fu) * (p01 - p00) + fu * (p11 - p10);
    }
    return (1 - fu) * (1 - fv) * p00 + fu * (1 - fv) * p10 + (1 - fu) * fv * p01 + fu * fv * p11;
}

std::optional<Eigen::Vector2d> LutInverse::find(double x, double y) const {
    const int gx = static_cast<int>(std::floor((x - x0_) / cell_w_));
    const int gy = static_cast<int>(std::floor((y - y0_) / cell_h_));
    constexpr int kReach = 2;
    if (gx < -kReach || gy < -kReach || gx >= grid_w_ + kReach || gy >= grid_h_ + kReach) return std::nullopt;

    std::int32_t seed = -1;
    double seed_d = std::numeric_limits<double>::infinity();
    for (int cy = std::max(0, gy - kReach); cy <= std::min(grid_h_ - 1, gy + kReach); ++cy) {
        for (int cx = std::max(0, gx - kReach); cx <= std::min(grid_w_ - 1, gx + kReach); ++cx) {
            const std::int32_t idx = grid_[static_cast<std::size_t>(cy) * grid_w_ + cx];
            if (idx < 0) continue;
            const double dx = lut_.xy[2 * static_cast<std::size_t>(idx)] - x;
            const double dy = lut_.xy[2 * static_cast<std::size_t>(idx) + 1] - y;
            if (dx * dx + dy * dy < seed_d) {
                seed_d = dx * dx + dy * dy;
                seed = idx;
            }
        }
    }
    if (seed < 0) return std::nullopt;

    Eigen::Vector2d uv(seed % lut_.width, seed / lut_.width);
    const Eigen::Vector2d target(x, y);
    double step = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 10 && step > 1e-9; ++it) {
        Eigen::Matrix2d jac;
        const Eigen::Vector2d r = target - sample(uv.x(), uv.y(), &jac);
        const double det = jac.determinant();
        if (!std::isfinite(det) || std::abs(det) < 1e-18) return std::nullopt;
        const Eigen::Vector2d d = jac.inverse() * r;
        uv += d;
        step = d.norm();
        // Keep the iterate near the table so the bilinear model stays valid.
        uv.x() = std::clamp(uv.x(), -1.0, lut_.width + 0.0);
        uv.y() = std::clamp(uv.y(), -1.0, lut_.height + 0.0);
    }
    if (step > 1e-3) return std::nullopt;
    constexpr double kEdge = 1e-6;
    if (uv.x() < -kEdge || uv.y() < -kEdge || uv.x() > lut_.width - 1 + kEdge || uv.y() > lut_.height - 1 + kEdge) {
        return std::nullopt;
    }
    uv.x() = std::clamp(uv.x(), 0.0, lut_.width - 1.0);
    uv.y() = std::clamp(uv.y(), 0.0, lut_.height - 1.0);
    return uv;
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

template <typename Project>
DepthImage align_impl(const DepthAbImage& img, const DepthCalibration& cal, const RigidTransform& chain, int w,
                      int h, Project&& project) {
    check_depth_inputs(img, cal);
    if (w <= 0 || h <= 0) throw ValidationError("color image dimensions must be positive");
    std::vector<double> zbuf(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
    const Eigen::Matrix3d r = chain.rotation().cast<double>();
    const Eigen::Vector3d t = chain.translation().cast<double>();
    const double scale = cal.scale;

    for (std::size_t i = 0; i < kDepthPixels; ++i) {
        if (!img.depth[i]) continue;
        const double z = img.depth[i] / scale;
        const Eigen::Vector3d p(cal.uv2xy.xy[2 * i] * z, cal.uv2xy.xy[2 * i + 1] * z, z);
        const Eigen::Vector3d q = r * p + t;
        if (!(q.z() > 0.0)) continue;
        const std::optional<Eigen::Vector2d> px = project(q);
        if (!px) continue;
        const long u = std::lround(px->x()), v = std::lround(px->y());
        if (u < 0 || v < 0 || u >= w || v >= h) continue;
        auto& slot = zbuf[static_cast<std::size_t>(v) * w + static_cast<std::size_t>(u)];
        slot = std::min(slot, q.z());
    }

    DepthImage out(w, h, 1);
    for (std::size_t i = 0; i < zbuf.size(); ++i) {
        if (!std::isfinite(zbuf[i])) continue;
        const double units = std::round(zbuf[i] * scale);
        out.pixels[i] = static_cast<std::uint16_t>(std::clamp(units, 0.0, 65535.0));
    }
    return out;
}

}  // namespace

DepthImage align_depth_to_color(const DepthAbImage& img, const DepthCalibration& depth_cal,
                                const PvCalibration& color_cal, int color_width, int color_height,
                                const RigidTransform& depth_to_color) {
    if (!(color_cal.focal[0] != 0.0f && color_cal.focal[1] != 0.0f)) {
        throw ValidationError("PV calibration has zero focal length");
    }
    return align_impl(img, depth_cal, depth_to_color, color_width, color_height,
                      [&](const Eigen::Vector3d& q) -> std::optional<Eigen::Vector2d> {
                          const Eigen::Vector2d d =
                              distort_brown_conrady({q.x() / q.z(), q.y() / q.z()}, color_cal.radial,
                                                    color_cal.tangential);
                          return Eigen::Vector2d(color_cal.focal[0] * d.x() + color_cal.principal[0],
                                                 color_cal.focal[1] * d.y() + color_cal.principal[1]);
                      });
}

DepthImage align_depth_to_color(const DepthAbImage& img, const DepthCalibration& depth_cal,
                                const LutInverse& color_lut, const RigidTransform& depth_to_color) {
    return align_impl(img, depth_cal, depth_to_color, color_lut.width(), color_lut.height(),
                      [&](const Eigen::Vector3d& q) { return color_lut.find(q.x() / q.z(), q.y() / q.z()); });
}

DepthImage align_depth_to_color(const DepthAbImage& img, const DepthCalibration& depth_cal,
                                const VlcCalibration& color_cal, const RigidTransform& depth_to_color) {
    return align_depth_to_color(img, depth_cal, LutInverse(color_cal.uv2xy), depth_to_color);
}

// ---------------------------------------------------------------------------
// Undistortion

template <typename T>
Image<T> undistort_via_lut(const Image<T>& image, const Uv2xyLut& lut, const PinholeIntrinsics& target,
                           Resampling mode, int out_width, int out_height) {
    if (lut.width != image.width || lut.height != image.height) {
        throw ValidationError("uv2xy table dimensions do not match the image");
    }
    if (!(target.fx != 0.0f && target.fy != 0.0f) || !std::isfinite(target.fx) || !std::isfinite(target.fy)) {
        throw ValidationError("target intrinsics have a degenerate focal length");
    }
    const int w = out_width > 0 ? out_width : image.width;
    const int h = out_height > 0 ? out_height : image.height;
    const LutInverse inverse(lut);
    Image<T> out(w, h, image.channels);

    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const double x = (u - static_cast<double>(target.cx)) / target.fx;
            const double y = (v - static_cast<double>(target.cy)) / target.fy;
            const auto src = inverse.find(x, y);
            if (!src) continue;
            if (mode == Resampling::Nearest) {
                const int su = static_cast<int>(std::lround(src->x()));
                const int sv = static_cast<int>(std::lround(src->y()));
                for (int c = 0; c < image.channels; ++c) out.at(u, v, c) = image.at(su, sv, c);
                continue;
            }
            const int i = std::min(static_cast<int>(std::floor(src->x())), image.width - 2);
            const int j = std::min(static_cast<int>(std::floor(src->y())), image.height - 2);
            const double fu = src->x() - i, fv = src->y() - j;
            for (int c = 0; c < image.channels; ++c) {
                const double val = (1 - fu) * (1 - fv) * image.at(i, j, c) + fu * (1 - fv) * image.at(i + 1, j, c) +
                                   (1 - fu) * fv * image.at(i, j + 1, c) + fu * fv * image.at(i + 1, j + 1, c);
                if constexpr (std::is_integral_v<T>) {
                    out.at(u, v, c) = static_cast<T>(std::clamp(std::round(val), 0.0,
                                                                static_cast<double>(std::numeric_limits<T>::max())));
                } else {
                    out.at(u, v, c) = static_cast<T>(val);
                }
            }
        }
    }
    return out;
}

template Image<std::uint8_t> undistort_via_lut(const Image<std::uint8_t>&, const Uv2xyLut&, const PinholeIntrinsics&,
                                               Resampling, int, int);
template Image<std::uint16_t> undistort_via_lut(const Image<std::uint16_t>&, const Uv2xyLut&,
                                                const PinholeIntrinsics&, Resampling, int, int);
template Image<float> undistort_via_lut(const Image<float>&, const Uv2xyLut&, const PinholeIntrinsics&, Resampling,
                                        int, int);

}  // namespace hl2ss
