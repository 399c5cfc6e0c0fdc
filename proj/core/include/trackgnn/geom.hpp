#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trackgnn/fxp.hpp"
#include "trackgnn/tensor.hpp"

namespace trackgnn {

// Detector layers after the z-sector split: 4 barrel layers (type A, more
// hits) and 7 endcap layers (type B, fewer hits).
enum class LayerId : std::uint8_t { B1, B2, B3, B4, E1, E2, E3, E4, E5, E6, E7 };

inline constexpr int num_layers = 11;
inline constexpr int num_edge_groups = 13;

enum class GroupType : std::uint8_t { A, B };

constexpr GroupType layer_type(LayerId l) {
    return static_cast<int>(l) < 4 ? GroupType::A : GroupType::B;
}

std::string_view layer_name(LayerId l);
std::optional<LayerId> parse_layer(std::string_view name);

constexpr std::array<LayerId, num_layers> all_layers() {
    return {LayerId::B1, LayerId::B2, LayerId::B3, LayerId::B4, LayerId::E1, LayerId::E2,
            LayerId::E3, LayerId::E4, LayerId::E5, LayerId::E6, LayerId::E7};
}

// An ordered legal layer pair; inner is the sender side, outer the receiver.
struct LayerPair {
    LayerId inner;
    LayerId outer;
    friend constexpr bool operator==(LayerPair, LayerPair) = default;
};

enum class PairType : std::uint8_t { AA, AB, BB };

constexpr PairType pair_type(LayerPair p) {
    const bool ia = layer_type(p.inner) == GroupType::A;
    const bool oa = layer_type(p.outer) == GroupType::A;
    if (ia && oa) return PairType::AA;
    if (!ia && !oa) return PairType::BB;
    return PairType::AB;
}

// The 13 legal layer pairs in canonical order: Bk->Bk+1, then Bk->E1,
// then Ek->Ek+1. This order defines the group-major accumulation contract
// used by partitioned aggregation.
const std::array<LayerPair, num_edge_groups>& legal_pairs();

// Rank of (inner, outer) in legal_pairs(), or nullopt if the pair is illegal.
std::optional<int> pair_index(LayerId inner, LayerId outer);

std::string pair_name(LayerPair p);

// Directed hit graph. Node features are cylindrical hit coordinates, edge
// features describe the candidate trajectory segment; both are quantized.
struct HitGraph {
    Mat<Fx> node_features;                 // n_nodes x d_node
    std::vector<LayerId> node_layers;      // n_nodes
    Mat<Fx> edge_features;                 // n_edges x d_edge
    std::vector<std::int32_t> senders;     // n_edges
    std::vector<std::int32_t> receivers;   // n_edges

    int num_nodes() const { return node_features.rows(); }
    int num_edges() const { return edge_features.rows(); }
    int node_dim() const { return node_features.cols(); }
    int edge_dim() const { return edge_features.cols(); }
};

struct Diagnostic {
    enum class Kind { index_out_of_range, self_loop, illegal_layer_pair, structure };
    Kind kind;
    std::int64_t edge = -1;  // offending edge id, or -1 for structural issues
    std::string message;
};

struct ValidationReport {
    std::vector<Diagnostic> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

// Reports every illegal layer pair, out-of-range index, and self-loop.
ValidationReport validate(const HitGraph& g);

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(ValidationReport report)
        : std::runtime_error(report.to_string()), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

// One of the 13 subgraphs: local copies of edge features plus indices into
// the inner (sender) and outer (receiver) node groups.
struct EdgeGroup {
    LayerPair pair{};
    std::vector<std::int32_t> global_edge;      // local edge -> global edge id, ascending
    std::vector<std::int32_t> local_sender;     // into inner node group
    std::vector<std::int32_t> local_receiver;   // into outer node group
    Mat<Fx> edge_features;

    int size() const { return edge_features.rows(); }
};

struct Partition {
    // node_groups[layer] lists global node ids in ascending order; the list
    // position is the node's local index.
    std::array<std::vector<std::int32_t>, num_layers> node_groups;
    std::array<Mat<Fx>, num_layers> group_node_features;
    std::array<EdgeGroup, num_edge_groups> edge_groups;
    std::vector<std::int32_t> node_local;  // global node -> local index
    int n_nodes = 0;
    int n_edges = 0;
    int d_node = 0;
    int d_edge = 0;

    const std::vector<std::int32_t>& inner_nodes(int group) const {
        return node_groups[static_cast<int>(edge_groups[group].pair.inner)];
    }
    const std::vector<std::int32_t>& outer_nodes(int group) const {
        return node_groups[static_cast<int>(edge_groups[group].pair.outer)];
    }
};

// Groups nodes by layer and routes each edge to the unique edge group for
// its layer pair. Throws ValidationError when validate(g) is non-empty.
Partition partition(const HitGraph& g);

// Inverse of partition: reconstructs the graph in original global node and
// edge order with identical feature bits.
HitGraph reassemble(const Partition& p);

// Edge-group rank (0..12) of every edge in a valid graph.
std::vector<std::int8_t> edge_group_index(const HitGraph& g);

// Sums per-edge-group partial aggregates into global node rows. partials[g]
// must have one row per node of group g's outer layer (or be empty when the
// group saw no edges). Summation is group-major in legal_pairs() order, so
// the result is bit-identical to the canonical whole-graph aggregation.
Mat<Fx> merge_aggregates(const std::array<Mat<Fx>, num_edge_groups>& partials,
                         const Partition& p);

// --- Graph construction from raw hits ---------------------------------------

// A hit before sector assignment. Barrel layers use layer_index 1..4; endcap
// disks may use any distinct per-disk index (their E1..E7 labels are assigned
// by |z| rank within each sector).
struct RawHit {
    double r = 0.0;
    double phi = 0.0;
    double z = 0.0;
    bool barrel = true;
    int layer_index = 1;
};

struct SectorHit {
    double r = 0.0;
    double phi = 0.0;
    double z = 0.0;
    LayerId layer = LayerId::B1;
};

struct SectorSplit {
    std::array<std::vector<SectorHit>, 2> sectors;  // 0: z >= 0, 1: z < 0
};

// Splits hits into the two z sectors and relabels endcap disks E1..E7 by
// increasing |z| within each sector. z = 0 goes to sector 0.
SectorSplit sector_split(const std::vector<RawHit>& hits);

using EdgeCut = std::function<bool(const SectorHit& inner, const SectorHit& outer)>;

// Accepts a candidate edge when |dphi| (wrapped to [-pi, pi]) and |dz| are
// within the window.
EdgeCut window_cut(double max_abs_dphi, double max_abs_dz);

inline EdgeCut permissive_cut() {
    return [](const SectorHit&, const SectorHit&) { return true; };
}

// For every legal layer pair, every (inner, outer) hit combination passing
// the cut becomes one edge. Node features are (r, phi, z); edge features are
// (dr, dphi, dz, rz-length), all quantized.
HitGraph build_graph(const std::vector<SectorHit>& hits, const EdgeCut& cut);

inline constexpr int build_graph_node_dim = 3;
inline constexpr int build_graph_edge_dim = 4;

// Nearest-rank percentile per dimension over (n_nodes, n_edges) samples.
std::pair<int, int> percentile_size(std::span<const std::pair<int, int>> sizes, double p);

}  // namespace trackgnn
