#pragma once

// Calibration-driven geometry: unprojection through uv2xy tables, rigid
// transforms, PV projection with Brown-Conrady distortion, and RGBD
// alignment.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hl2ss/calibration.hpp"
#include "hl2ss/codecs.hpp"
#include "hl2ss/image.hpp"
#include "hl2ss/wire.hpp"

namespace hl2ss {

/// 4x4 rigid transform, row-major, last row (0, 0, 0, 1).
class RigidTransform {
public:
    RigidTransform() : m_(Eigen::Matrix4f::Identity()) {}
    explicit RigidTransform(const Eigen::Matrix4f& m) : m_(m) {}

    static RigidTransform identity() { return {}; }
    static RigidTransform from_row_major(const std::array<float, 16>& m);
    static RigidTransform from_pose(const Pose& p) { return from_row_major(p.m); }
    static RigidTransform translation(float x, float y, float z);
    static RigidTransform from_rotation_translation(const Eigen::Matrix3f& r, const Eigen::Vector3f& t);

    const Eigen::Matrix4f& matrix() const noexcept { return m_; }
    Eigen::Matrix3f rotation() const { return m_.topLeftCorner<3, 3>(); }
    Eigen::Vector3f translation() const { return m_.topRightCorner<3, 1>(); }
    std::array<float, 16> row_major() const;

    /// Inverse assuming an orthonormal rotation block.
    RigidTransform inverse() const;
    /// (this * other)(p) == this(other(p)).
    RigidTransform operator*(const RigidTransform& other) const { return RigidTransform(m_ * other.m_); }
    Eigen::Vector3f apply(const Eigen::Vector3f& p) const { return rotation() * p + translation(); }

    /// Rotation block orthonormal and last row exact.
    bool is_rigid(float tolerance = 1e-4f) const;

private:
    Eigen::Matrix4f m_;
};

struct PointCloud {
    std::vector<Eigen::Vector3f> points;               // meters
    std::vector<std::array<std::uint8_t, 3>> colors;  // empty or one per point

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

/// One point per nonzero depth pixel, in the depth sensor frame:
/// z = depth / scale, point = (x * z, y * z, z) with (x, y) from the LUT.
PointCloud depth_to_points(const DepthAbImage& img, const DepthCalibration& cal);

PointCloud transform_points(const PointCloud& pc, const RigidTransform& t);

/// Normalized image-plane point -> distorted normalized point.
Eigen::Vector2d distort_brown_conrady(const Eigen::Vector2d& xy, const std::array<float, 3>& radial,
                                      const std::array<float, 2>& tangential);

/// Camera-frame point -> PV pixel. Throws ValidationError if z <= 0.
Eigen::Vector2f project_pv(const Eigen::Vector3f& point, const PvCalibration& cal);

/// Inverts a uv2xy table: unit-plane coordinates -> fractional pixel.
///
/// A coarse grid over the table's (x, y) extent gives the nearest sample;
/// a few Newton steps on the bilinear interpolant refine it.
class LutInverse {
public:
    explicit LutInverse(const Uv2xyLut& lut);

    /// Pixel (u, v) whose interpolated LUT value equals (x, y), or nothing
    /// if (x, y) falls outside the table.
    std::optional<Eigen::Vector2d> find(double x, double y) const;

    int width() const noexcept { return lut_.width; }
    int height() const noexcept { return lut_.height; }

private:
    Eigen::Vector2d sample(double u, double v, Eigen::Matrix2d* jacobian) const;

    Uv2xyLut lut_;
    double x0_ = 0.0, y0_ = 0.0;
    double cell_w_ = 1.0, cell_h_ = 1.0;
    int grid_w_ = 0, grid_h_ = 0;
    std::vector<std::int32_t> grid_;
};

/// Depth reprojected into a color camera, in depth units (same scale as
/// the input). Unmapped pixels are 0; collisions keep the nearest depth.
/// `depth_to_color` maps depth-sensor coordinates to color-sensor
/// coordinates.
DepthImage align_depth_to_color(const DepthAbImage& img, const DepthCalibration& depth_cal,
                                const PvCalibration& color_cal, int color_width, int color_height,
                                const RigidTransform& depth_to_color);

DepthImage align_depth_to_color(const DepthAbImage& img, const DepthCalibration& depth_cal,
                                const LutInverse& color_lut, const RigidTransform& depth_to_color);

DepthImage align_depth_to_color(const DepthAbImage& img, const DepthCalibration& depth_cal,
                                const VlcCalibration& color_cal, const RigidTransform& depth_to_color);

enum class Resampling { Nearest, Bilinear };

/// Resamples `image` (any channel count) to an ideal pinhole camera.
/// Output pixels whose ray misses the source are 0.
template <typename T>
Image<T> undistort_via_lut(const Image<T>& image, const Uv2xyLut& lut, const PinholeIntrinsics& target,
                           Resampling mode = Resampling::Bilinear, int out_width = 0, int out_height = 0);

}  // namespace hl2ss
