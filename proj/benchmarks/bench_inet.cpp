#include <benchmark/benchmark.h>

#include "trackgnn/inet.hpp"
#include "trackgnn/io.hpp"

using namespace trackgnn;

namespace {

struct Fixture {
    HitGraph graph = generate_synthetic(1, nominal_profile());
    Partition part = partition(graph);
    InferConfig cfg;
    ModelParams params = random_params(cfg, 2);
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

static void BM_InferFixedNominal(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(infer_fixed(f.graph, f.params, f.cfg));
    state.SetItemsProcessed(state.iterations() * f.graph.num_edges());
}
BENCHMARK(BM_InferFixedNominal);

static void BM_InferRealNominal(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(infer_real(f.graph, f.params, f.cfg));
    state.SetItemsProcessed(state.iterations() * f.graph.num_edges());
}
BENCHMARK(BM_InferRealNominal);

static void BM_InferPartitionedFixed(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(infer_partitioned_fixed(f.part, f.params, f.cfg));
    }
    state.SetItemsProcessed(state.iterations() * f.graph.num_edges());
}
BENCHMARK(BM_InferPartitionedFixed);

static void BM_PartitionNominal(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(partition(f.graph));
}
BENCHMARK(BM_PartitionNominal);

BENCHMARK_MAIN();
