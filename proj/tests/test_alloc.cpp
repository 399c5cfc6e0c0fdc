#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trackgnn/alloc.hpp"
#include "trackgnn/rng.hpp"

using namespace trackgnn;

namespace {

const GroupWorkloads table_workloads = make_workloads(138, 62, 277, 77, 87);

}

TEST_CASE("uniform allocation: one PE per group, 11 + 13 + 13") {
    const Allocation a = allocate_uniform(table_workloads);
    for (int pes : a.nodeblock_pes) CHECK(pes == 1);
    for (int pes : a.edgeblock_pes) CHECK(pes == 1);
    for (int pes : a.aggregate_pes) CHECK(pes == 1);
    CHECK(a.total_nodeblock() == 11);
    CHECK(a.total_edgeblock() == 13);
    CHECK(a.total_aggregate() == 13);
    CHECK(a.total() == 37);
}

TEST_CASE("data-aware allocation reproduces the published counts") {
    const Allocation a = allocate_data_aware(table_workloads);
    for (int l = 0; l < num_layers; ++l) {
        const int expected = layer_type(static_cast<LayerId>(l)) == GroupType::A ? 2 : 1;
        CHECK(a.nodeblock_pes[l] == expected);
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        int expected = 1;
        if (pair_type(legal_pairs()[gi]) == PairType::AA) expected = 4;
        CHECK(a.edgeblock_pes[gi] == expected);
        CHECK(a.aggregate_pes[gi] == expected);
    }
}

TEST_CASE("equal sizes collapse to one PE everywhere") {
    const Allocation a = allocate_data_aware(make_workloads(50, 50, 70, 70, 70));
    CHECK(a.total() == 37);
}

TEST_CASE("zero-size minimum falls back to one PE per group") {
    const Allocation a = allocate_data_aware(make_workloads(140, 0, 300, 0, 90));
    for (int pes : a.nodeblock_pes) CHECK(pes == 1);
    for (int pes : a.edgeblock_pes) CHECK(pes == 1);
}

TEST_CASE("negative workloads are rejected") {
    GroupWorkloads w = table_workloads;
    w.node_sizes[0] = -1;
    CHECK_THROWS_AS(allocate_data_aware(w), std::invalid_argument);
}

TEST_CASE("allocation is scale-invariant per kind") {
    for (int k : {2, 3, 10}) {
        GroupWorkloads scaled = table_workloads;
        for (auto& s : scaled.node_sizes) s *= k;
        CHECK(allocate_data_aware(scaled).nodeblock_pes ==
              allocate_data_aware(table_workloads).nodeblock_pes);
        GroupWorkloads scaled_edges = table_workloads;
        for (auto& s : scaled_edges.edge_sizes) s *= k;
        CHECK(allocate_data_aware(scaled_edges).edgeblock_pes ==
              allocate_data_aware(table_workloads).edgeblock_pes);
    }
}

TEST_CASE("growing a non-minimal group never shrinks its PE count") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        GroupWorkloads w;
        for (auto& s : w.node_sizes) s = 10 + rng.index(300);
        for (auto& s : w.edge_sizes) s = 10 + rng.index(500);
        const Allocation before = allocate_data_aware(w);

        const int min_node = *std::min_element(w.node_sizes.begin(), w.node_sizes.end());
        int pick = -1;
        for (int l = 0; l < num_layers; ++l) {
            if (w.node_sizes[l] > min_node) pick = l;
        }
        if (pick < 0) continue;
        GroupWorkloads grown = w;
        grown.node_sizes[pick] += 1 + rng.index(100);
        const Allocation after = allocate_data_aware(grown);
        CHECK(after.nodeblock_pes[pick] >= before.nodeblock_pes[pick]);
    }
}

TEST_CASE("proportional split hits the requested totals exactly") {
    const GroupWorkloads w = proportional_workloads(739, 1252);
    CHECK(w.total_nodes() == 739);
    CHECK(w.total_edges() == 1252);
    // Type-A node groups stay larger than type-B ones at these ratios.
    CHECK(w.node_sizes[0] > w.node_sizes[4]);

    const GroupWorkloads zero = proportional_workloads(0, 0);
    CHECK(zero.total_nodes() == 0);
    CHECK(zero.total_edges() == 0);
}

TEST_CASE("resource model: whole-graph node array at nominal size") {
    const GroupWorkloads w = proportional_workloads(739, 1252);
    const ResourceEstimate est = estimate_resources(mpa_config(1), w, ModelDims{});
    CHECK(est.node_array_bits_per_pe_max == 739 * 3 * 14);  // 31,038 bits
    CHECK(est.node_array_bits_per_pe_max == 31038);
    // One 36 Kib block per array, two arrays (Edgeblock + Aggregate).
    CHECK(est.node_array_brams == 2);
    CHECK(est.total_brams == 2);
    CHECK(est.multipliers > 0);
    CHECK(est.register_bits > 0);
}

TEST_CASE("resource model: geometry capacity is the larger touched group") {
    const GroupWorkloads w = make_workloads(138, 62, 277, 77, 87);
    const PeConfig pe = geo_config(allocate_uniform(w), false);
    const ResourceEstimate est = estimate_resources(pe, w, ModelDims{});
    CHECK(est.node_array_bits_per_pe_max == 138 * 3 * 14);
    CHECK(est.node_array_bits_per_pe_max < 739 * 3 * 14);
}

TEST_CASE("resource model: zero PEs cost nothing") {
    PeConfig none;
    none.mpa_pes = 0;
    const ResourceEstimate est =
        estimate_resources(none, proportional_workloads(739, 1252), ModelDims{});
    CHECK(est.node_array_bits_total == 0);
    CHECK(est.node_array_brams == 0);
    CHECK(est.total_brams == 0);
    CHECK(est.multipliers == 0);
    CHECK(est.register_bits == 0);
}

TEST_CASE("geometry per-PE arrays never exceed the uniform ones") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        GroupWorkloads w;
        for (auto& s : w.node_sizes) s = rng.index(200);
        for (auto& s : w.edge_sizes) s = rng.index(300);
        const auto uni = estimate_resources(mpa_config(1), w, ModelDims{});
        const auto geo = estimate_resources(geo_config(allocate_uniform(w), false), w,
                                            ModelDims{});
        CHECK(geo.node_array_bits_per_pe_max <= uni.node_array_bits_per_pe_max);
    }
}

TEST_CASE("fifo bits round up to whole blocks") {
    const GroupWorkloads w = proportional_workloads(100, 200);
    const auto none = estimate_resources(mpa_config(1), w, ModelDims{}, 0);
    CHECK(none.fifo_brams == 0);
    const auto one = estimate_resources(mpa_config(1), w, ModelDims{}, 1);
    CHECK(one.fifo_brams == 1);
    const auto two = estimate_resources(mpa_config(1), w, ModelDims{}, bram_bits + 1);
    CHECK(two.fifo_brams == 2);
}
