#include <random>

#include <benchmark/benchmark.h>

#include "hl2ss/geometry.hpp"

using namespace hl2ss;

namespace {

DepthAbImage wall(std::uint16_t mm) {
    DepthAbImage img;
    std::fill(img.depth.begin(), img.depth.end(), mm);
    return img;
}

void BM_DepthToPoints(benchmark::State& state) {
    const auto cal = synth_depth_calibration(default_depth_intrinsics());
    const auto img = wall(1800);
    for (auto _ : state) {
        auto pc = depth_to_points(img, cal);
        benchmark::DoNotOptimize(pc.points.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * kDepthPixels));
}
BENCHMARK(BM_DepthToPoints);

void BM_TransformPoints(benchmark::State& state) {
    const auto cal = synth_depth_calibration(default_depth_intrinsics());
    const auto pc = depth_to_points(wall(1800), cal);
    const auto t = RigidTransform::translation(0.1f, 0, 0);
    for (auto _ : state) {
        auto out = transform_points(pc, t);
        benchmark::DoNotOptimize(out.points.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pc.size()));
}
BENCHMARK(BM_TransformPoints);

void BM_AlignToPv(benchmark::State& state) {
    const auto cal = synth_depth_calibration(default_depth_intrinsics());
    const auto pv = synth_pv_calibration(default_pv_intrinsics(640, 360));
    const auto img = wall(1800);
    for (auto _ : state) {
        auto out = align_depth_to_color(img, cal, pv, 640, 360, RigidTransform::translation(0.02f, 0, 0));
        benchmark::DoNotOptimize(out.pixels.data());
    }
}
BENCHMARK(BM_AlignToPv);

void BM_LutInverseBuild(benchmark::State& state) {
    const auto lut = synth_pinhole_lut(640, 480, default_vlc_intrinsics());
    for (auto _ : state) {
        LutInverse inv(lut);
        benchmark::DoNotOptimize(&inv);
    }
}
BENCHMARK(BM_LutInverseBuild);

}  // namespace
