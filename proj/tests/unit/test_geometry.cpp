#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hl2ss/errors.hpp"
#include "hl2ss/geometry.hpp"
#include "oracles.hpp"

using namespace hl2ss;

namespace {

const PinholeIntrinsics kDepthK = default_depth_intrinsics();

DepthCalibration pinhole_depth() { return synth_depth_calibration(kDepthK); }

Eigen::Vector3d to_d(const Eigen::Vector3f& v) { return v.cast<double>(); }

}  // namespace

TEST(RigidTransform, BasicsAndInverse) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto m = testsupport::random_rigid(rng);
        const auto t = RigidTransform::from_row_major(m);
        EXPECT_TRUE(t.is_rigid());
        EXPECT_EQ(t.row_major(), m);
        const auto id = t * t.inverse();
        EXPECT_TRUE(id.matrix().isApprox(Eigen::Matrix4f::Identity(), 1e-5f));
    }
    EXPECT_FALSE(RigidTransform(Eigen::Matrix4f::Constant(2.0f)).is_rigid());
    const auto tr = RigidTransform::translation(1, 2, 3);
    EXPECT_EQ(tr.apply({0, 0, 0}), Eigen::Vector3f(1, 2, 3));
    EXPECT_EQ(RigidTransform::from_pose(Pose::identity()).matrix(), Eigen::Matrix4f::Identity());
}

TEST(TransformPoints, MatchesBruteForceAndKeepsDistances) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(-3, 3);
    PointCloud pc;
    for (int i = 0; i < 500; ++i) pc.points.emplace_back(u(rng), u(rng), u(rng));
    EXPECT_EQ(transform_points(pc, RigidTransform::identity()).points, pc.points);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = testsupport::random_rigid(rng);
        const auto out = transform_points(pc, RigidTransform::from_row_major(m));
        ASSERT_EQ(out.size(), pc.size());
        for (std::size_t i = 0; i < pc.size(); ++i) {
            const auto& p = pc.points[i];
            const auto ref = testsupport::mul_point(m, {p.x(), p.y(), p.z()});
            for (int k = 0; k < 3; ++k) ASSERT_NEAR(out.points[i][k], ref[static_cast<std::size_t>(k)], 1e-5);
        }
        for (int k = 0; k < 200; ++k) {
            const std::size_t a = rng() % pc.size(), b = rng() % pc.size();
            const double before = (to_d(pc.points[a]) - to_d(pc.points[b])).norm();
            const double after = (to_d(out.points[a]) - to_d(out.points[b])).norm();
            ASSERT_NEAR(before, after, 1e-5);
        }
    }
}

TEST(DepthToPoints, OpticalAxisPixel) {
    DepthCalibration cal;  // all-zero LUT, scale 1000
    DepthAbImage img;
    img.depth[DepthAbImage::index(7, 9)] = 1000;
    const auto pc = depth_to_points(img, cal);
    ASSERT_EQ(pc.size(), 1u);
    EXPECT_EQ(pc.points[0], Eigen::Vector3f(0, 0, 1));
    EXPECT_TRUE(depth_to_points(DepthAbImage{}, cal).empty());
}

TEST(DepthToPoints, PlaneResiduals) {
    // Plane n.p = d with n = (0.1, -0.2, 1) / |.|, d = 1.5 m.
    const auto cal = pinhole_depth();
    const Eigen::Vector3d n = Eigen::Vector3d(0.1, -0.2, 1.0).normalized();
    const double d = 1.5;
    DepthAbImage img;
    for (int v = 0; v < kDepthHeight; ++v) {
        for (int u = 0; u < kDepthWidth; ++u) {
            const double x = cal.uv2xy.x(u, v), y = cal.uv2xy.y(u, v);
            const double z = d / (n.x() * x + n.y() * y + n.z());
            img.depth[DepthAbImage::index(u, v)] = static_cast<std::uint16_t>(std::lround(z * 1000.0));
        }
    }
    const auto pc = depth_to_points(img, cal);
    ASSERT_EQ(pc.size(), kDepthPixels);
    // Depth is quantized to 1 mm, so rebuild each plane value from the quantized z.
    double worst = 0;
    std::size_t i = 0;
    for (int v = 0; v < kDepthHeight; ++v) {
        for (int u = 0; u < kDepthWidth; ++u, ++i) {
            const double z = img.depth[DepthAbImage::index(u, v)] / 1000.0;
            const Eigen::Vector3d expect(cal.uv2xy.x(u, v) * z, cal.uv2xy.y(u, v) * z, z);
            worst = std::max(worst, (to_d(pc.points[i]) - expect).norm());
        }
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(DepthToPoints, Validation) {
    DepthAbImage bad;
    bad.depth.resize(10);
    EXPECT_THROW(depth_to_points(bad, pinhole_depth()), ValidationError);
    auto cal = pinhole_depth();
    cal.scale = 0;
    EXPECT_THROW(depth_to_points(DepthAbImage{}, cal), ValidationError);
}

TEST(ProjectPv, ZeroDistortionAndStraightLine) {
    const PinholeIntrinsics k{1000, 1000, 960, 540};
    const auto cal = synth_pv_calibration(k);
    const auto px = project_pv({0, 0, 1}, cal);
    EXPECT_FLOAT_EQ(px.x(), 960);
    EXPECT_FLOAT_EQ(px.y(), 540);
    EXPECT_THROW(project_pv({0, 0, 0}, cal), ValidationError);
    EXPECT_THROW(project_pv({0, 0, -1}, cal), ValidationError);
}

TEST(ProjectPv, UnprojectRoundTripEveryPixel) {
    const PinholeIntrinsics k{500.5f, 498.25f, 319.5f, 179.5f};
    const auto lut = synth_pinhole_lut(640, 360, k);
    const auto cal = synth_pv_calibration(k);
    double worst = 0;
    for (int v = 0; v < 360; ++v) {
        for (int u = 0; u < 640; ++u) {
            const float z = 0.5f + 0.01f * static_cast<float>((u + v) % 300);
            const Eigen::Vector3f p(lut.x(u, v) * z, lut.y(u, v) * z, z);
            const auto px = project_pv(p, cal);
            worst = std::max({worst, std::abs(px.x() - double(u)), std::abs(px.y() - double(v))});
        }
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(Distortion, MatchesReference) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    std::uniform_real_distribution<float> kd(-0.3f, 0.3f), pd(-0.01f, 0.01f);
    for (int i = 0; i < 2000; ++i) {
        const std::array<float, 3> radial{kd(rng), kd(rng), kd(rng)};
        const std::array<float, 2> tang{pd(rng), pd(rng)};
        const double x = u(rng), y = u(rng);
        const auto got = distort_brown_conrady({x, y}, radial, tang);
        const auto ref = testsupport::distort_reference(x, y, radial, tang);
        // 1e-5 px at a 2000 px focal length
        ASSERT_NEAR(got.x(), ref[0], 5e-9);
        ASSERT_NEAR(got.y(), ref[1], 5e-9);
    }
}

TEST(ProjectPv, DistortedMatchesReference) {
    std::mt19937_64 rng(5);
    PvCalibration cal = synth_pv_calibration({1450, 1452, 950, 520});
    cal.radial = {0.12f, -0.05f, 0.01f};
    cal.tangential = {0.002f, -0.001f};
    std::uniform_real_distribution<float> u(-0.5f, 0.5f), z(0.5f, 4.0f);
    for (int i = 0; i < 2000; ++i) {
        const float zz = z(rng);
        const Eigen::Vector3f p(u(rng) * zz, u(rng) * zz, zz);
        const auto ref = testsupport::distort_reference(double(p.x()) / p.z(), double(p.y()) / p.z(), cal.radial,
                                                        cal.tangential);
        const auto px = project_pv(p, cal);
        ASSERT_NEAR(px.x(), cal.focal[0] * ref[0] + cal.principal[0], 1e-3);
        ASSERT_NEAR(px.y(), cal.focal[1] * ref[1] + cal.principal[1], 1e-3);
    }
}

TEST(LutInverse, RecoversPixels) {
    const auto lut = synth_pinhole_lut(640, 480, default_vlc_intrinsics());
    const LutInverse inv(lut);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uu(0, 639), vv(0, 479);
    const auto k = default_vlc_intrinsics();
    for (int i = 0; i < 1000; ++i) {
        const double u = uu(rng), v = vv(rng);
        const auto px = inv.find((u - k.cx) / k.fx, (v - k.cy) / k.fy);
        ASSERT_TRUE(px);
        ASSERT_NEAR(px->x(), u, 1e-3);
        ASSERT_NEAR(px->y(), v, 1e-3);
    }
    EXPECT_FALSE(inv.find(10.0, 0.0));
}

TEST(LutInverse, HandlesRadialDistortion) {
    Uv2xyLut lut(320, 288);
    const auto k = default_depth_intrinsics();
    for (int v = 0; v < 288; ++v) {
        for (int u = 0; u < 320; ++u) {
            const double x = (u - k.cx) / k.fx, y = (v - k.cy) / k.fy;
            const double s = 1.0 - 0.08 * (x * x + y * y);
            lut.set(u, v, static_cast<float>(x * s), static_cast<float>(y * s));
        }
    }
    const LutInverse inv(lut);
    for (int v = 3; v < 288; v += 17) {
        for (int u = 5; u < 320; u += 13) {
            const auto px = inv.find(lut.x(u, v), lut.y(u, v));
            ASSERT_TRUE(px);
            ASSERT_NEAR(px->x(), u, 1e-3);
            ASSERT_NEAR(px->y(), v, 1e-3);
        }
    }
}

TEST(Align, IdentityReproducesMaskedInput) {
    const auto cal = pinhole_depth();
    const auto color = synth_pv_calibration(kDepthK);
    std::mt19937_64 rng(7);
    DepthAbImage img;
    for (auto& d : img.depth) d = (rng() % 5 == 0) ? 0 : static_cast<std::uint16_t>(300 + rng() % 4000);
    const auto out = align_depth_to_color(img, cal, color, kDepthWidth, kDepthHeight, RigidTransform::identity());
    ASSERT_EQ(out.width, kDepthWidth);
    ASSERT_EQ(out.height, kDepthHeight);
    EXPECT_EQ(out.pixels, img.depth);

    // Same through the LUT-inverse path.
    const LutInverse inv(cal.uv2xy);
    EXPECT_EQ(align_depth_to_color(img, cal, inv, RigidTransform::identity()).pixels, img.depth);
}

TEST(Align, PureTranslationShiftsColumns) {
    const auto cal = pinhole_depth();
    const auto color = synth_pv_calibration(kDepthK);
    DepthAbImage img;
    std::fill(img.depth.begin(), img.depth.end(), std::uint16_t{2000});
    // fx * tx / z = 210 * 0.1 / 2 = 10.5 -> choose tx so the shift is exactly 10 px
    const float tx = 10.0f * 2.0f / kDepthK.fx;
    const auto out = align_depth_to_color(img, cal, color, kDepthWidth, kDepthHeight,
                                          RigidTransform::translation(tx, 0, 0));
    for (int v = 0; v < kDepthHeight; ++v) {
        for (int u = 0; u < kDepthWidth; ++u) {
            const std::uint16_t want = u >= 10 ? 2000 : 0;
            ASSERT_EQ(out.at(u, v), want) << u << "," << v;
        }
    }
}

TEST(Align, CollisionKeepsNearest) {
    // Two depth pixels on the same ray from the color camera's point of view:
    // a wide color camera maps neighbouring depth pixels to one color pixel.
    const auto cal = pinhole_depth();
    const auto color = synth_pv_calibration({kDepthK.fx / 4, kDepthK.fy / 4, 40, 36});
    DepthAbImage img;
    img.depth[DepthAbImage::index(160, 144)] = 3000;
    img.depth[DepthAbImage::index(161, 144)] = 1200;
    const auto out = align_depth_to_color(img, cal, color, 80, 72, RigidTransform::identity());
    int hits = 0;
    for (auto d : out.pixels) {
        if (d) {
            ++hits;
            EXPECT_EQ(d, 1200);
        }
    }
    EXPECT_EQ(hits, 1);
}

TEST(Align, VlcTarget) {
    const auto cal = pinhole_depth();
    const auto vlc = synth_vlc_calibration(default_vlc_intrinsics());
    DepthAbImage img;
    img.depth[DepthAbImage::index(159, 143)] = 1000;  // close to the axis
    const auto out = align_depth_to_color(img, cal, vlc, RigidTransform::identity());
    ASSERT_EQ(out.width, 640);
    ASSERT_EQ(out.height, 480);
    const auto k = default_vlc_intrinsics();
    const int u = static_cast<int>(std::lround(k.cx + k.fx * cal.uv2xy.x(159, 143)));
    const int v = static_cast<int>(std::lround(k.cy + k.fy * cal.uv2xy.y(159, 143)));
    EXPECT_EQ(out.at(u, v), 1000);
}

TEST(Undistort, PinholeIdentity) {
    const PinholeIntrinsics k{300, 300, 63.5f, 47.5f};
    const auto lut = synth_pinhole_lut(128, 96, k);
    Image<std::uint8_t> img(128, 96, 3);
    std::mt19937_64 rng(8);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(undistort_via_lut(img, lut, k, Resampling::Bilinear), img);
    EXPECT_EQ(undistort_via_lut(img, lut, k, Resampling::Nearest), img);
}

TEST(Undistort, OutOfRangeIsZeroAndValidation) {
    const PinholeIntrinsics k{300, 300, 63.5f, 47.5f};
    const auto lut = synth_pinhole_lut(128, 96, k);
    Image<float> img(128, 96, 1, 1.0f);
    // A much wider target sees past the source edges.
    const auto out = undistort_via_lut(img, lut, PinholeIntrinsics{100, 100, 63.5f, 47.5f});
    EXPECT_EQ(out.at(0, 0), 0.0f);
    EXPECT_EQ(out.at(64, 48), 1.0f);
    EXPECT_THROW(undistort_via_lut(img, lut, PinholeIntrinsics{0, 100, 1, 1}), ValidationError);
    Image<float> wrong(10, 10, 1);
    EXPECT_THROW(undistort_via_lut(wrong, lut, k), ValidationError);
}

TEST(Undistort, CheckerboardEdgesBecomeStraight) {
    // Source camera with barrel distortion looks at a plane of horizontal
    // stripes. After undistortion every stripe edge must be a straight row.
    const int W = 320, H = 240;
    const PinholeIntrinsics k{250, 250, 159.5f, 119.5f};
    const double k1 = -0.25;
    // uv2xy for the distorted camera: invert r_d = r (1 + k1 r^2) by fixed point.
    Uv2xyLut lut(W, H);
    Image<std::uint8_t> img(W, H, 1);
    for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
            const double xd = (u - k.cx) / k.fx, yd = (v - k.cy) / k.fy;
            double x = xd, y = yd;
            for (int it = 0; it < 50; ++it) {
                const double s = 1 + k1 * (x * x + y * y);
                x = xd / s;
                y = yd / s;
            }
            lut.set(u, v, static_cast<float>(x), static_cast<float>(y));
            // stripes 0.1 wide in unit-plane y, offset to avoid an edge at 0
            const int band = static_cast<int>(std::floor((y + 0.05) / 0.1));
            img.at(u, v) = (band % 2 == 0) ? 255 : 0;
        }
    }
    const auto out = undistort_via_lut(img, lut, k, Resampling::Nearest);
    // Every black/white transition must sit on the row of a straight edge.
    double worst = 0;
    int edges = 0;
    for (int u = 40; u < W - 40; u += 8) {
        for (int v = 20; v < H - 21; ++v) {
            const auto a = out.at(u, v), b = out.at(u, v + 1);
            if ((a > 127) != (b > 127)) {
                // Undistorted edge lies at y = 0.1 n - 0.05, row v + 0.5 ideally.
                const double yrow = (v + 0.5 - k.cy) / k.fy;
                const double n = std::round((yrow + 0.05) / 0.1);
                const double ideal = k.cy + k.fy * (0.1 * n - 0.05);
                worst = std::max(worst, std::abs(ideal - (v + 0.5)));
                ++edges;
            }
        }
    }
    EXPECT_GT(edges, 100);
    EXPECT_LT(worst, 1.0);
}
