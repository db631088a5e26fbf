#include <random>

#include <benchmark/benchmark.h>

#include "hl2ss/codecs.hpp"

using namespace hl2ss;

namespace {

// Smooth depth with a little noise, roughly what a room looks like.
DepthAbImage scene_like() {
    std::mt19937_64 rng(2);
    DepthAbImage img;
    for (int v = 0; v < kDepthHeight; ++v) {
        for (int u = 0; u < kDepthWidth; ++u) {
            const auto k = DepthAbImage::index(u, v);
            img.depth[k] = static_cast<std::uint16_t>(1500 + 3 * u + 2 * v + rng() % 8);
            img.ab[k] = static_cast<std::uint16_t>(200 + (u ^ v) % 64);
        }
    }
    return img;
}

void BM_DepthPngEncode(benchmark::State& state) {
    const auto img = scene_like();
    const SigmaMask mask;
    const PngOptions opts{static_cast<int>(state.range(0))};
    std::size_t size = 0;
    for (auto _ : state) {
        const Bytes png = encode_depth_png(img, mask, opts);
        size = png.size();
        benchmark::DoNotOptimize(png.data());
    }
    state.counters["bytes"] = static_cast<double>(size);
}
BENCHMARK(BM_DepthPngEncode)->Arg(0)->Arg(1)->Arg(6);

void BM_DepthPngDecode(benchmark::State& state) {
    const Bytes png = encode_depth_png(scene_like(), PngOptions{1});
    for (auto _ : state) {
        auto img = decode_depth_png(png);
        benchmark::DoNotOptimize(img.depth.data());
    }
}
BENCHMARK(BM_DepthPngDecode);

}  // namespace
