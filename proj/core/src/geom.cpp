#include "trackgnn/geom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace trackgnn {

namespace {

constexpr std::array<std::string_view, num_layers> layer_names = {
    "B1", "B2", "B3", "B4", "E1", "E2", "E3", "E4", "E5", "E6", "E7"};

}  // namespace

std::string_view layer_name(LayerId l) { return layer_names[static_cast<int>(l)]; }

std::optional<LayerId> parse_layer(std::string_view name) {
    for (int i = 0; i < num_layers; ++i) {
        if (layer_names[i] == name) return static_cast<LayerId>(i);
    }
    return std::nullopt;
}

const std::array<LayerPair, num_edge_groups>& legal_pairs() {
    using L = LayerId;
    static const std::array<LayerPair, num_edge_groups> pairs = {{
        {L::B1, L::B2},
        {L::B2, L::B3},
        {L::B3, L::B4},
        {L::B1, L::E1},
        {L::B2, L::E1},
        {L::B3, L::E1},
        {L::B4, L::E1},
        {L::E1, L::E2},
        {L::E2, L::E3},
        {L::E3, L::E4},
        {L::E4, L::E5},
        {L::E5, L::E6},
        {L::E6, L::E7},
    }};
    return pairs;
}

std::optional<int> pair_index(LayerId inner, LayerId outer) {
    const auto& pairs = legal_pairs();
    for (int i = 0; i < num_edge_groups; ++i) {
        if (pairs[i].inner == inner && pairs[i].outer == outer) return i;
    }
    return std::nullopt;
}

std::string pair_name(LayerPair p) {
    std::string s{layer_name(p.inner)};
    s += '-';
    s += layer_name(p.outer);
    return s;
}

std::string ValidationReport::to_string() const {
    if (issues.empty()) return "valid";
    std::ostringstream os;
    os << issues.size() << " issue(s):";
    for (const auto& d : issues) os << "\n  " << d.message;
    return os.str();
}

ValidationReport validate(const HitGraph& g) {
    ValidationReport report;
    const int n = g.num_nodes();
    const int m = g.num_edges();

    if (static_cast<int>(g.node_layers.size()) != n) {
        report.issues.push_back({Diagnostic::Kind::structure, -1,
                                 "node_layers size does not match node count"});
        return report;
    }
    if (static_cast<int>(g.senders.size()) != m || static_cast<int>(g.receivers.size()) != m) {
        report.issues.push_back({Diagnostic::Kind::structure, -1,
                                 "sender/receiver index count does not match edge count"});
        return report;
    }

    for (int e = 0; e < m; ++e) {
        const auto s = g.senders[e];
        const auto r = g.receivers[e];
        if (s < 0 || s >= n || r < 0 || r >= n) {
            std::ostringstream os;
            os << "edge " << e << ": index (" << s << ", " << r << ") out of range for "
               << n << " nodes";
            report.issues.push_back({Diagnostic::Kind::index_out_of_range, e, os.str()});
            continue;
        }
        if (s == r) {
            std::ostringstream os;
            os << "edge " << e << ": self-loop at node " << s;
            report.issues.push_back({Diagnostic::Kind::self_loop, e, os.str()});
            continue;
        }
        if (!pair_index(g.node_layers[s], g.node_layers[r])) {
            std::ostringstream os;
            os << "edge " << e << ": illegal layer pair " << layer_name(g.node_layers[s])
               << "->" << layer_name(g.node_layers[r]);
            report.issues.push_back({Diagnostic::Kind::illegal_layer_pair, e, os.str()});
        }
    }
    return report;
}

Partition partition(const HitGraph& g) {
    auto report = validate(g);
    if (!report.ok()) throw ValidationError(std::move(report));

    Partition p;
    p.n_nodes = g.num_nodes();
    p.n_edges = g.num_edges();
    p.d_node = g.node_dim();
    p.d_edge = g.edge_dim();
    p.node_local.assign(p.n_nodes, -1);

    for (int v = 0; v < p.n_nodes; ++v) {
        auto& group = p.node_groups[static_cast<int>(g.node_layers[v])];
        p.node_local[v] = static_cast<std::int32_t>(group.size());
        group.push_back(v);
    }
    for (int l = 0; l < num_layers; ++l) {
        const auto& ids = p.node_groups[l];
        Mat<Fx> feats(static_cast<int>(ids.size()), p.d_node);
        for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
            for (int c = 0; c < p.d_node; ++c) feats(i, c) = g.node_features(ids[i], c);
        }
        p.group_node_features[l] = std::move(feats);
    }

    std::array<std::vector<std::int32_t>, num_edge_groups> edges_by_group;
    for (int e = 0; e < p.n_edges; ++e) {
        const auto idx = pair_index(g.node_layers[g.senders[e]], g.node_layers[g.receivers[e]]);
        edges_by_group[*idx].push_back(e);  // ascending since e ascends
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        EdgeGroup& eg = p.edge_groups[gi];
        eg.pair = legal_pairs()[gi];
        const auto& ids = edges_by_group[gi];
        eg.global_edge = ids;
        eg.local_sender.resize(ids.size());
        eg.local_receiver.resize(ids.size());
        eg.edge_features = Mat<Fx>(static_cast<int>(ids.size()), p.d_edge);
        for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
            const int e = ids[i];
            eg.local_sender[i] = p.node_local[g.senders[e]];
            eg.local_receiver[i] = p.node_local[g.receivers[e]];
            for (int c = 0; c < p.d_edge; ++c) eg.edge_features(i, c) = g.edge_features(e, c);
        }
    }
    return p;
}

HitGraph reassemble(const Partition& p) {
    HitGraph g;
    g.node_features = Mat<Fx>(p.n_nodes, p.d_node);
    g.node_layers.resize(p.n_nodes);
    g.edge_features = Mat<Fx>(p.n_edges, p.d_edge);
    g.senders.resize(p.n_edges);
    g.receivers.resize(p.n_edges);

    for (int l = 0; l < num_layers; ++l) {
        const auto& ids = p.node_groups[l];
        for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
            const int v = ids[i];
            g.node_layers[v] = static_cast<LayerId>(l);
            for (int c = 0; c < p.d_node; ++c) g.node_features(v, c) = p.group_node_features[l](i, c);
        }
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const EdgeGroup& eg = p.edge_groups[gi];
        const auto& inner = p.node_groups[static_cast<int>(eg.pair.inner)];
        const auto& outer = p.node_groups[static_cast<int>(eg.pair.outer)];
        for (int i = 0; i < eg.size(); ++i) {
            const int e = eg.global_edge[i];
            g.senders[e] = inner[eg.local_sender[i]];
            g.receivers[e] = outer[eg.local_receiver[i]];
            for (int c = 0; c < p.d_edge; ++c) g.edge_features(e, c) = eg.edge_features(i, c);
        }
    }
    return g;
}

std::vector<std::int8_t> edge_group_index(const HitGraph& g) {
    std::vector<std::int8_t> out(g.num_edges());
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto idx = pair_index(g.node_layers[g.senders[e]], g.node_layers[g.receivers[e]]);
        if (!idx) throw std::invalid_argument("edge_group_index: graph has illegal edges");
        out[e] = static_cast<std::int8_t>(*idx);
    }
    return out;
}

Mat<Fx> merge_aggregates(const std::array<Mat<Fx>, num_edge_groups>& partials,
                         const Partition& p) {
    int d = -1;
    for (const auto& m : partials) {
        if (m.rows() > 0 || m.cols() > 0) {
            d = m.cols();
            break;
        }
    }
    if (d < 0) d = p.d_edge;
    Mat<Fx> out(p.n_nodes, d);

    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const Mat<Fx>& part = partials[gi];
        const auto& outer = p.node_groups[static_cast<int>(legal_pairs()[gi].outer)];
        if (part.rows() == 0 && part.cols() == 0) continue;  // group untouched
        if (part.rows() != static_cast<int>(outer.size()) || part.cols() != d) {
            throw std::invalid_argument("merge_aggregates: partial shape mismatch for group " +
                                        pair_name(legal_pairs()[gi]));
        }
        for (int i = 0; i < part.rows(); ++i) {
            const int v = outer[i];
            for (int c = 0; c < d; ++c) out(v, c) = fx_add(out(v, c), part(i, c));
        }
    }
    return out;
}

SectorSplit sector_split(const std::vector<RawHit>& hits) {
    SectorSplit split;
    // Gather distinct endcap disk ids per sector, ranked by mean |z|.
    for (int s = 0; s < 2; ++s) {
        std::map<int, std::pair<double, int>> disks;  // id -> (sum |z|, count)
        for (const auto& h : hits) {
            if (!std::isfinite(h.z)) throw std::domain_error("sector_split: non-finite z");
            const int sector = h.z >= 0.0 ? 0 : 1;
            if (sector != s || h.barrel) continue;
            auto& acc = disks[h.layer_index];
            acc.first += std::abs(h.z);
            acc.second += 1;
        }
        if (disks.size() > 7) {
            throw std::invalid_argument("sector_split: more than 7 endcap disks in one sector");
        }
        std::vector<std::pair<int, double>> ranked;
        for (const auto& [id, acc] : disks) ranked.push_back({id, acc.first / acc.second});
        std::sort(ranked.begin(), ranked.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });
        std::map<int, LayerId> relabel;
        for (int i = 0; i < static_cast<int>(ranked.size()); ++i) {
            relabel[ranked[i].first] = static_cast<LayerId>(static_cast<int>(LayerId::E1) + i);
        }

        for (const auto& h : hits) {
            const int sector = h.z >= 0.0 ? 0 : 1;
            if (sector != s) continue;
            SectorHit sh{h.r, h.phi, h.z, LayerId::B1};
            if (h.barrel) {
                if (h.layer_index < 1 || h.layer_index > 4) {
                    throw std::invalid_argument("sector_split: barrel layer index out of 1..4");
                }
                sh.layer = static_cast<LayerId>(h.layer_index - 1);
            } else {
                sh.layer = relabel.at(h.layer_index);
            }
            split.sectors[s].push_back(sh);
        }
    }
    return split;
}

namespace {

double wrap_phi(double dphi) {
    constexpr double pi = std::numbers::pi;
    while (dphi > pi) dphi -= 2 * pi;
    while (dphi < -pi) dphi += 2 * pi;
    return dphi;
}

}  // namespace

EdgeCut window_cut(double max_abs_dphi, double max_abs_dz) {
    return [=](const SectorHit& a, const SectorHit& b) {
        return std::abs(wrap_phi(b.phi - a.phi)) <= max_abs_dphi &&
               std::abs(b.z - a.z) <= max_abs_dz;
    };
}

HitGraph build_graph(const std::vector<SectorHit>& hits, const EdgeCut& cut) {
    HitGraph g;
    const int n = static_cast<int>(hits.size());
    g.node_features = Mat<Fx>(n, build_graph_node_dim);
    g.node_layers.resize(n);
    for (int v = 0; v < n; ++v) {
        g.node_features(v, 0) = quantize(hits[v].r);
        g.node_features(v, 1) = quantize(hits[v].phi);
        g.node_features(v, 2) = quantize(hits[v].z);
        g.node_layers[v] = hits[v].layer;
    }

    std::array<std::vector<std::int32_t>, num_layers> by_layer;
    for (int v = 0; v < n; ++v) by_layer[static_cast<int>(hits[v].layer)].push_back(v);

    std::vector<std::int32_t> senders;
    std::vector<std::int32_t> receivers;
    std::vector<std::array<double, build_graph_edge_dim>> feats;
    for (const auto& pair : legal_pairs()) {
        for (const int i : by_layer[static_cast<int>(pair.inner)]) {
            for (const int j : by_layer[static_cast<int>(pair.outer)]) {
                if (!cut(hits[i], hits[j])) continue;
                const double dr = hits[j].r - hits[i].r;
                const double dphi = wrap_phi(hits[j].phi - hits[i].phi);
                const double dz = hits[j].z - hits[i].z;
                senders.push_back(i);
                receivers.push_back(j);
                feats.push_back({dr, dphi, dz, std::hypot(dr, dz)});
            }
        }
    }

    const int m = static_cast<int>(senders.size());
    g.edge_features = Mat<Fx>(m, build_graph_edge_dim);
    for (int e = 0; e < m; ++e) {
        for (int c = 0; c < build_graph_edge_dim; ++c) g.edge_features(e, c) = quantize(feats[e][c]);
    }
    g.senders = std::move(senders);
    g.receivers = std::move(receivers);
    return g;
}

std::pair<int, int> percentile_size(std::span<const std::pair<int, int>> sizes, double p) {
    if (sizes.empty()) throw std::domain_error("percentile_size: empty dataset");
    if (p < 0.0 || p > 100.0) throw std::domain_error("percentile_size: percentile out of range");

    std::vector<int> nodes, edges;
    nodes.reserve(sizes.size());
    edges.reserve(sizes.size());
    for (const auto& [n, m] : sizes) {
        nodes.push_back(n);
        edges.push_back(m);
    }
    std::sort(nodes.begin(), nodes.end());
    std::sort(edges.begin(), edges.end());

    const auto count = static_cast<double>(sizes.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * count));
    if (rank < 1) rank = 1;
    return {nodes[rank - 1], edges[rank - 1]};
}

}  // namespace trackgnn
