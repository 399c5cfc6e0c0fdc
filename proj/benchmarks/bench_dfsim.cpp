#include <benchmark/benchmark.h>

#include "trackgnn/dfsim.hpp"

using namespace trackgnn;

static void BM_SimulateMpa8(benchmark::State& state) {
    const Workload w = nominal_workload();
    const PeConfig pe = default_pe_config(Variant::mpa, w, 8);
    const CostModel cost = default_cost_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(pe, w, cost, 200.0, unbounded_fifos()));
    }
}
BENCHMARK(BM_SimulateMpa8);

static void BM_SimulateGeoRsrc(benchmark::State& state) {
    const Workload w = nominal_workload();
    const PeConfig pe = default_pe_config(Variant::mpa_geo_rsrc, w);
    const CostModel cost = default_cost_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(pe, w, cost, 200.0, unbounded_fifos()));
    }
}
BENCHMARK(BM_SimulateGeoRsrc);

static void BM_SweepMpa1to8(benchmark::State& state) {
    const Workload w = nominal_workload();
    const CostModel cost = default_cost_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(sweep_pes(Variant::mpa, 1, 8, w, cost, 200.0));
    }
}
BENCHMARK(BM_SweepMpa1to8);

static void BM_MinFifoDepthsGeoRsrc(benchmark::State& state) {
    const Workload w = nominal_workload();
    const PeConfig pe = default_pe_config(Variant::mpa_geo_rsrc, w);
    const CostModel cost = default_cost_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(min_fifo_depths(pe, w, cost, 200.0));
    }
}
BENCHMARK(BM_MinFifoDepthsGeoRsrc)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
