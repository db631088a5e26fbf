#include <random>

#include <benchmark/benchmark.h>

#include "hl2ss/wire.hpp"

using namespace hl2ss;

namespace {

Bytes stream_of(std::size_t frames, std::size_t payload, bool pose) {
    std::mt19937_64 rng(1);
    Bytes out;
    for (std::size_t i = 0; i < frames; ++i) {
        DataFrame f{Timestamp{i * 333333}, Bytes(payload), std::nullopt};
        for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
        if (pose) f.pose = Pose::identity();
        append_frame(out, f, pose);
    }
    return out;
}

// Args: payload bytes, chunk bytes.
void BM_UnpackerFeed(benchmark::State& state) {
    const auto payload = static_cast<std::size_t>(state.range(0));
    const auto chunk = static_cast<std::size_t>(state.range(1));
    const Bytes data = stream_of(64, payload, true);
    std::vector<DataFrame> out;
    for (auto _ : state) {
        FrameUnpacker u(true);
        out.clear();
        for (std::size_t off = 0; off < data.size(); off += chunk)
            u.feed(ByteView(data.data() + off, std::min(chunk, data.size() - off)), out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}
BENCHMARK(BM_UnpackerFeed)->Args({2604, 4096})->Args({307216, 65536})->Args({307216, 1500})->Args({1 << 20, 65536});

void BM_EncodeFrame(benchmark::State& state) {
    DataFrame f{Timestamp{1}, Bytes(static_cast<std::size_t>(state.range(0)), 7), Pose::identity()};
    Bytes out;
    for (auto _ : state) {
        out.clear();
        append_frame(out, f, true);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * out.size()));
}
BENCHMARK(BM_EncodeFrame)->Arg(2604)->Arg(307216);

}  // namespace
