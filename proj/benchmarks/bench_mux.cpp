#include <random>

#include <benchmark/benchmark.h>

#include "hl2ss/mux.hpp"

using namespace hl2ss;
using namespace hl2ss::mux;

namespace {

void fill(RingBuffer& b, std::size_t n, bool ordered) {
    std::mt19937_64 rng(3);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t ts = ordered ? i * 333333 : rng() % (n * 333333);
        b.push(std::make_shared<DataFrame>(DataFrame{Timestamp{ts}, {}, std::nullopt}));
    }
}

// Args: capacity, ordered.
void BM_Nearest(benchmark::State& state) {
    const auto cap = static_cast<std::size_t>(state.range(0));
    RingBuffer b(cap);
    fill(b, cap * 2, state.range(1) != 0);
    std::mt19937_64 rng(4);
    for (auto _ : state) {
        auto r = b.nearest(Timestamp{rng() % (cap * 2 * 333333)});
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_Nearest)->Args({30, 1})->Args({300, 1})->Args({3000, 1})->Args({300, 0});

void BM_InterconnectNearest(benchmark::State& state) {
    Interconnect ic({300, Scheduling::Manual, false});
    Sink sink = ic.attach();
    for (std::uint64_t i = 0; i < 600; ++i) ic.push(DataFrame{Timestamp{i * 333333}, {}, std::nullopt});
    ic.drain();
    std::mt19937_64 rng(5);
    for (auto _ : state) {
        auto fut = sink.submit_nearest(Timestamp{rng() % (600 * 333333)});
        ic.drain();
        benchmark::DoNotOptimize(fut.get());
    }
}
BENCHMARK(BM_InterconnectNearest);

}  // namespace
