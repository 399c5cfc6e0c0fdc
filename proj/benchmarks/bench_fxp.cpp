#include <benchmark/benchmark.h>

#include <vector>

#include "trackgnn/fxp.hpp"
#include "trackgnn/rng.hpp"

using namespace trackgnn;

namespace {

std::vector<Fx> random_values(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Fx> out(n);
    for (auto& v : out) v = Fx::from_raw(static_cast<int>(rng.below(16384)) + Fx::raw_min);
    return out;
}

}  // namespace

static void BM_FxMul(benchmark::State& state) {
    const auto a = random_values(4096, 1);
    const auto b = random_values(4096, 2);
    for (auto _ : state) {
        Fx acc;
        for (std::size_t i = 0; i < a.size(); ++i) acc = fx_add(acc, fx_mul(a[i], b[i]));
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_FxMul);

static void BM_FxHardSigmoid(benchmark::State& state) {
    const auto a = random_values(4096, 3);
    for (auto _ : state) {
        for (const Fx v : a) benchmark::DoNotOptimize(fx_hard_sigmoid(v));
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_FxHardSigmoid);

static void BM_Quantize(benchmark::State& state) {
    Rng rng(4);
    std::vector<double> xs(4096);
    for (auto& x : xs) x = rng.uniform(-70.0, 70.0);
    for (auto _ : state) {
        for (const double x : xs) benchmark::DoNotOptimize(quantize(x));
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_Quantize);

BENCHMARK_MAIN();
