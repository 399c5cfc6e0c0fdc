#include "trackgnn/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace trackgnn {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::mpa: return "mpa";
        case Variant::mpa_geo: return "mpa_geo";
        case Variant::mpa_geo_rsrc: return "mpa_geo_rsrc";
    }
    return "?";
}

int GroupWorkloads::total_nodes() const {
    return std::accumulate(node_sizes.begin(), node_sizes.end(), 0);
}

int GroupWorkloads::total_edges() const {
    return std::accumulate(edge_sizes.begin(), edge_sizes.end(), 0);
}

GroupWorkloads make_workloads(int node_a, int node_b, int edge_aa, int edge_ab, int edge_bb) {
    GroupWorkloads w;
    for (int l = 0; l < num_layers; ++l) {
        w.node_sizes[l] =
            layer_type(static_cast<LayerId>(l)) == GroupType::A ? node_a : node_b;
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        switch (pair_type(legal_pairs()[gi])) {
            case PairType::AA: w.edge_sizes[gi] = edge_aa; break;
            case PairType::AB: w.edge_sizes[gi] = edge_ab; break;
            case PairType::BB: w.edge_sizes[gi] = edge_bb; break;
        }
    }
    return w;
}

namespace {

// Largest-remainder apportionment of total across weights; ties broken by
// larger fraction, then lower index.
std::vector<int> apportion(int total, const std::vector<int>& weights) {
    const long long wsum = std::accumulate(weights.begin(), weights.end(), 0LL);
    std::vector<int> out(weights.size(), 0);
    if (wsum == 0 || total == 0) return out;
    std::vector<std::pair<double, int>> fracs;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = static_cast<double>(total) * weights[i] / static_cast<double>(wsum);
        out[i] = static_cast<int>(std::floor(quota));
        assigned += out[i];
        fracs.push_back({quota - out[i], static_cast<int>(i)});
    }
    std::sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int k = 0; k < total - assigned; ++k) out[fracs[k].second] += 1;
    return out;
}

}  // namespace

GroupWorkloads proportional_workloads(int total_nodes, int total_edges) {
    const GroupWorkloads ratios = make_workloads(138, 62, 277, 77, 87);
    GroupWorkloads w;
    const auto nodes = apportion(
        total_nodes, {ratios.node_sizes.begin(), ratios.node_sizes.end()});
    const auto edges = apportion(
        total_edges, {ratios.edge_sizes.begin(), ratios.edge_sizes.end()});
    std::copy(nodes.begin(), nodes.end(), w.node_sizes.begin());
    std::copy(edges.begin(), edges.end(), w.edge_sizes.begin());
    return w;
}

int Allocation::total_nodeblock() const {
    return std::accumulate(nodeblock_pes.begin(), nodeblock_pes.end(), 0);
}
int Allocation::total_edgeblock() const {
    return std::accumulate(edgeblock_pes.begin(), edgeblock_pes.end(), 0);
}
int Allocation::total_aggregate() const {
    return std::accumulate(aggregate_pes.begin(), aggregate_pes.end(), 0);
}

namespace {

void check_workloads(const GroupWorkloads& groups) {
    for (int s : groups.node_sizes) {
        if (s < 0) throw std::invalid_argument("workload sizes must be >= 0");
    }
    for (int s : groups.edge_sizes) {
        if (s < 0) throw std::invalid_argument("workload sizes must be >= 0");
    }
}

}  // namespace

Allocation allocate_uniform(const GroupWorkloads& groups) {
    check_workloads(groups);
    Allocation a;
    a.nodeblock_pes.fill(1);
    a.edgeblock_pes.fill(1);
    a.aggregate_pes.fill(1);
    return a;
}

Allocation allocate_data_aware(const GroupWorkloads& groups) {
    check_workloads(groups);
    Allocation a;

    const int node_min = *std::min_element(groups.node_sizes.begin(), groups.node_sizes.end());
    for (int l = 0; l < num_layers; ++l) {
        a.nodeblock_pes[l] =
            node_min == 0
                ? 1
                : std::max(1, static_cast<int>(std::llround(
                                  static_cast<double>(groups.node_sizes[l]) / node_min)));
    }

    const int edge_min = *std::min_element(groups.edge_sizes.begin(), groups.edge_sizes.end());
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const int pes =
            edge_min == 0
                ? 1
                : std::max(1, static_cast<int>(std::llround(
                                  static_cast<double>(groups.edge_sizes[gi]) / edge_min)));
        a.edgeblock_pes[gi] = pes;
        a.aggregate_pes[gi] = pes;
    }
    return a;
}

PeConfig mpa_config(int pes) {
    if (pes < 1) throw std::invalid_argument("mpa_config: PE count must be >= 1");
    PeConfig c;
    c.variant = Variant::mpa;
    c.mpa_pes = pes;
    return c;
}

PeConfig geo_config(const Allocation& a, bool data_aware) {
    PeConfig c;
    c.variant = data_aware ? Variant::mpa_geo_rsrc : Variant::mpa_geo;
    c.groups = a;
    return c;
}

namespace {

std::int64_t mlp_multipliers(const std::vector<int>& dims) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        total += static_cast<std::int64_t>(dims[i]) * dims[i + 1];
    }
    return total;
}

std::int64_t mlp_param_count(const std::vector<int>& dims) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        total += static_cast<std::int64_t>(dims[i]) * dims[i + 1] + dims[i + 1];
    }
    return total;
}

std::vector<int> dims_chain(const ModelDims& d, int in, int out) {
    std::vector<int> dims{in};
    for (int i = 0; i < d.hidden_depth; ++i) dims.push_back(d.hidden_width);
    dims.push_back(out);
    return dims;
}

int brams_for(std::int64_t bits) {
    return bits == 0 ? 0 : static_cast<int>((bits + bram_bits - 1) / bram_bits);
}

}  // namespace

ResourceEstimate estimate_resources(const PeConfig& pe, const GroupWorkloads& workloads,
                                    const ModelDims& dims, std::int64_t fifo_bits_total) {
    if (workloads.total_nodes() < 0) throw std::invalid_argument("negative workload");
    ResourceEstimate est;

    const auto edge_dims = dims_chain(dims, 2 * dims.d_node + dims.d_edge, dims.d_edge);
    const auto node_dims = dims_chain(dims, dims.d_node + dims.d_edge, dims.d_node);
    const auto cls_dims = dims_chain(dims, 2 * dims.d_node + dims.d_edge, 1);

    const std::int64_t row_bits = static_cast<std::int64_t>(dims.d_node) * Fx::word_bits;

    // Node-array capacity per Edgeblock/Aggregate PE: the whole graph for
    // MPA, the larger of the two touched node groups for geometry variants.
    struct ArrayPe {
        std::int64_t capacity;
        int count;
    };
    std::vector<ArrayPe> array_pes;
    std::int64_t edgeblock_pe_total = 0;
    std::int64_t nodeblock_pe_total = 0;

    if (pe.variant == Variant::mpa) {
        const std::int64_t cap = workloads.total_nodes();
        array_pes.push_back({cap, 2 * pe.mpa_pes});  // Edgeblock + Aggregate PEs
        edgeblock_pe_total = pe.mpa_pes;
        nodeblock_pe_total = pe.mpa_pes;
    } else {
        for (int gi = 0; gi < num_edge_groups; ++gi) {
            const auto pair = legal_pairs()[gi];
            const std::int64_t cap =
                std::max(workloads.node_sizes[static_cast<int>(pair.inner)],
                         workloads.node_sizes[static_cast<int>(pair.outer)]);
            array_pes.push_back({cap, pe.groups.edgeblock_pes[gi] + pe.groups.aggregate_pes[gi]});
            edgeblock_pe_total += pe.groups.edgeblock_pes[gi];
        }
        nodeblock_pe_total = pe.groups.total_nodeblock();
    }

    for (const auto& [cap, count] : array_pes) {
        if (count <= 0) continue;
        const std::int64_t bits = cap * row_bits;
        est.node_array_bits_per_pe_max = std::max(est.node_array_bits_per_pe_max, bits);
        est.node_array_bits_total += bits * count;
        est.node_array_brams += brams_for(bits) * count;
    }

    // Classifier PEs mirror the Edgeblock provisioning.
    const std::int64_t mult_per_edge_pe = mlp_multipliers(edge_dims) + mlp_multipliers(cls_dims);
    const std::int64_t mult_per_node_pe = mlp_multipliers(node_dims);
    est.multipliers =
        mult_per_edge_pe * edgeblock_pe_total + mult_per_node_pe * nodeblock_pe_total;
    est.register_bits = Fx::word_bits * ((mlp_param_count(edge_dims) + mlp_param_count(cls_dims)) *
                                             edgeblock_pe_total +
                                         mlp_param_count(node_dims) * nodeblock_pe_total);

    est.fifo_brams = brams_for(fifo_bits_total);
    est.total_brams = est.node_array_brams + est.fifo_brams;
    return est;
}

}  // namespace trackgnn
