#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "trackgnn/geom.hpp"

namespace trackgnn {

// The three architectures: MPA processes the whole graph with N identical
// system PEs per stage; the geometry variants run one unit per node/edge
// group, uniformly (mpa_geo) or workload-proportionally (mpa_geo_rsrc)
// provisioned.
enum class Variant : std::uint8_t { mpa, mpa_geo, mpa_geo_rsrc };

std::string variant_name(Variant v);

// Representative element counts per node group and per edge group.
struct GroupWorkloads {
    std::array<int, num_layers> node_sizes{};
    std::array<int, num_edge_groups> edge_sizes{};

    int total_nodes() const;
    int total_edges() const;
};

// Same size for every group of a type (the shape of the published workload
// table: node A/B, edge A-A/A-B/B-B).
GroupWorkloads make_workloads(int node_a, int node_b, int edge_aa, int edge_ab, int edge_bb);

// Splits whole-graph totals across groups in the published type ratios
// (138:62 nodes, 277:77:87 edges), largest-remainder rounded so the totals
// are met exactly.
GroupWorkloads proportional_workloads(int total_nodes, int total_edges);

// Per-group PE counts for the three pipeline stages. Edgeblock and Aggregate
// are provisioned per edge group, Nodeblock per node group.
struct Allocation {
    std::array<int, num_layers> nodeblock_pes{};
    std::array<int, num_edge_groups> edgeblock_pes{};
    std::array<int, num_edge_groups> aggregate_pes{};

    int total_nodeblock() const;
    int total_edgeblock() const;
    int total_aggregate() const;
    int total() const { return total_nodeblock() + total_edgeblock() + total_aggregate(); }
};

// One PE per group per stage: 11 Nodeblock + 13 Edgeblock + 13 Aggregate.
Allocation allocate_uniform(const GroupWorkloads& groups);

// Each group gets round(size / min size among groups of its kind) PEs,
// minimum 1. Reproduces the published table: node A=2 B=1, edge A-A=4
// A-B=1 B-B=1 for sizes {138, 62} / {277, 77, 87}.
Allocation allocate_data_aware(const GroupWorkloads& groups);

// Variant plus the PE provisioning it runs with.
struct PeConfig {
    Variant variant = Variant::mpa;
    int mpa_pes = 1;     // per stage, when variant == mpa
    Allocation groups;   // when variant is a geometry variant
};

PeConfig mpa_config(int pes);
PeConfig geo_config(const Allocation& a, bool data_aware);

struct ModelDims {
    int d_node = 3;
    int d_edge = 4;
    int hidden_width = 8;
    int hidden_depth = 2;
};

// First-order resource model: per-PE node arrays in 36 Kib block memories,
// fully-unrolled MLP multipliers, weights in registers. FIFO memory is
// supplied by the caller (the simulator knows the channel depths).
struct ResourceEstimate {
    std::int64_t node_array_bits_per_pe_max = 0;
    std::int64_t node_array_bits_total = 0;
    int node_array_brams = 0;
    int fifo_brams = 0;
    int total_brams = 0;
    std::int64_t multipliers = 0;
    std::int64_t register_bits = 0;
};

inline constexpr std::int64_t bram_bits = 36 * 1024;

ResourceEstimate estimate_resources(const PeConfig& pe, const GroupWorkloads& workloads,
                                    const ModelDims& dims, std::int64_t fifo_bits_total = 0);

}  // namespace trackgnn
