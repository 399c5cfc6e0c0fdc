#include "trackgnn/inet.hpp"

#include <algorithm>
#include <utility>

#include "trackgnn/rng.hpp"

namespace trackgnn {

LinearLayer make_layer(Mat<double> weight, std::vector<double> bias) {
    if (static_cast<int>(bias.size()) != weight.rows()) {
        throw std::invalid_argument("make_layer: bias size must equal weight rows");
    }
    LinearLayer layer;
    layer.weight_fx = Mat<Fx>(weight.rows(), weight.cols());
    for (int r = 0; r < weight.rows(); ++r) {
        for (int c = 0; c < weight.cols(); ++c) layer.weight_fx(r, c) = quantize(weight(r, c));
    }
    layer.bias_fx.resize(bias.size());
    for (std::size_t i = 0; i < bias.size(); ++i) layer.bias_fx[i] = quantize(bias[i]);
    layer.weight_real = std::move(weight);
    layer.bias_real = std::move(bias);
    return layer;
}

void validate_config(const InferConfig& cfg) {
    if (cfg.d_node < 1 || cfg.d_edge < 1 || cfg.hidden_width < 1 || cfg.hidden_depth < 0) {
        throw std::invalid_argument("InferConfig: dimensions must be positive");
    }
    if (cfg.iterations < 1) {
        throw std::invalid_argument("InferConfig: iteration count must be >= 1");
    }
}

namespace {

std::vector<int> mlp_dims(const InferConfig& cfg, int in, int out) {
    std::vector<int> dims{in};
    for (int i = 0; i < cfg.hidden_depth; ++i) dims.push_back(cfg.hidden_width);
    dims.push_back(out);
    return dims;
}

void check_mlp(const Mlp& mlp, int in, int out, const char* name) {
    if (mlp.layers.empty()) throw std::invalid_argument(std::string(name) + ": empty MLP");
    if (mlp.in_dim() != in || mlp.out_dim() != out) {
        throw std::invalid_argument(std::string(name) + ": input/output dims do not match config");
    }
    for (std::size_t i = 0; i + 1 < mlp.layers.size(); ++i) {
        if (mlp.layers[i].out_dim() != mlp.layers[i + 1].in_dim()) {
            throw std::invalid_argument(std::string(name) + ": layer dims do not chain");
        }
    }
    for (const auto& layer : mlp.layers) {
        if (static_cast<int>(layer.bias_real.size()) != layer.out_dim() ||
            layer.weight_fx.rows() != layer.weight_real.rows() ||
            layer.weight_fx.cols() != layer.weight_real.cols()) {
            throw std::invalid_argument(std::string(name) + ": inconsistent layer storage");
        }
    }
}

Mlp build_mlp(const std::vector<int>& dims, Rng* rng) {
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Mat<double> w(dims[i + 1], dims[i]);
        std::vector<double> b(static_cast<std::size_t>(dims[i + 1]), 0.0);
        if (rng) {
            // Fan-in-scaled uniform init. Keeping the per-unit weight mass
            // near 1 stops quantization error from compounding layer over
            // layer, which would swamp the fixed-vs-real comparison.
            const double limit = std::min(1.0, 2.0 / dims[i]);
            for (auto& v : w.data()) v = rng->uniform(-limit, limit);
            for (auto& v : b) v = rng->uniform(-limit, limit);
        }
        mlp.layers.push_back(make_layer(std::move(w), std::move(b)));
    }
    return mlp;
}

}  // namespace

void check_shapes(const ModelParams& params, const InferConfig& cfg, const HitGraph* g) {
    validate_config(cfg);
    check_mlp(params.edge_mlp, 2 * cfg.d_node + cfg.d_edge, cfg.d_edge, "edge_mlp");
    check_mlp(params.node_mlp, cfg.d_node + cfg.d_edge, cfg.d_node, "node_mlp");
    check_mlp(params.classifier_mlp, 2 * cfg.d_node + cfg.d_edge, 1, "classifier_mlp");
    if (g) {
        if ((g->num_nodes() > 0 && g->node_dim() != cfg.d_node) ||
            (g->num_edges() > 0 && g->edge_dim() != cfg.d_edge)) {
            throw std::invalid_argument("check_shapes: graph dims do not match config");
        }
    }
}

ModelParams random_params(const InferConfig& cfg, std::uint64_t seed) {
    validate_config(cfg);
    Rng rng(seed);
    ModelParams p;
    p.edge_mlp = build_mlp(mlp_dims(cfg, 2 * cfg.d_node + cfg.d_edge, cfg.d_edge), &rng);
    p.node_mlp = build_mlp(mlp_dims(cfg, cfg.d_node + cfg.d_edge, cfg.d_node), &rng);
    p.classifier_mlp = build_mlp(mlp_dims(cfg, 2 * cfg.d_node + cfg.d_edge, 1), &rng);
    return p;
}

ModelParams zero_params(const InferConfig& cfg) {
    validate_config(cfg);
    ModelParams p;
    p.edge_mlp = build_mlp(mlp_dims(cfg, 2 * cfg.d_node + cfg.d_edge, cfg.d_edge), nullptr);
    p.node_mlp = build_mlp(mlp_dims(cfg, cfg.d_node + cfg.d_edge, cfg.d_node), nullptr);
    p.classifier_mlp = build_mlp(mlp_dims(cfg, 2 * cfg.d_node + cfg.d_edge, 1), nullptr);
    return p;
}

namespace {

template <typename S>
std::vector<S> infer_impl(const HitGraph& g, const ModelParams& params, const InferConfig& cfg) {
    check_shapes(params, cfg, &g);
    auto report = validate(g);
    if (!report.ok()) throw ValidationError(std::move(report));
    if (g.num_nodes() == 0 && g.num_edges() == 0) return {};

    Mat<S> nodes = detail::to_mat<S>(g.node_features);
    Mat<S> edges = detail::to_mat<S>(g.edge_features);
    const auto groups = edge_group_index(g);

    for (int it = 0; it < cfg.iterations; ++it) {
        edges = edge_block<S>(nodes, nodes, g.senders, g.receivers, edges, params.edge_mlp);
        Mat<S> agg = aggregate_grouped<S>(edges, g.receivers, groups, g.num_nodes());
        nodes = node_block<S>(nodes, agg, params.node_mlp);
    }
    return classify_edges<S>(nodes, nodes, g.senders, g.receivers, edges, params.classifier_mlp);
}

template <typename S>
std::vector<S> infer_partitioned_impl(const Partition& p, const ModelParams& params,
                                      const InferConfig& cfg) {
    using A = detail::Arith<S>;
    check_shapes(params, cfg);
    if (p.n_nodes == 0 && p.n_edges == 0) return {};
    if ((p.n_nodes > 0 && p.d_node != cfg.d_node) || (p.n_edges > 0 && p.d_edge != cfg.d_edge)) {
        throw std::invalid_argument("infer_partitioned: partition dims do not match config");
    }

    std::array<Mat<S>, num_layers> nodes;
    for (int l = 0; l < num_layers; ++l) nodes[l] = detail::to_mat<S>(p.group_node_features[l]);
    std::array<Mat<S>, num_edge_groups> edges;
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        edges[gi] = detail::to_mat<S>(p.edge_groups[gi].edge_features);
    }

    const int d_agg = params.edge_mlp.out_dim();
    for (int it = 0; it < cfg.iterations; ++it) {
        // Edgeblock per edge group: each subgraph is independent.
        std::array<Mat<S>, num_edge_groups> partials;
        for (int gi = 0; gi < num_edge_groups; ++gi) {
            const EdgeGroup& eg = p.edge_groups[gi];
            const int inner = static_cast<int>(eg.pair.inner);
            const int outer = static_cast<int>(eg.pair.outer);
            edges[gi] = edge_block<S>(nodes[inner], nodes[outer], eg.local_sender,
                                      eg.local_receiver, edges[gi], params.edge_mlp);
            partials[gi] = aggregate<S>(edges[gi], eg.local_receiver, nodes[outer].rows());
        }
        // Merge partials per node group in canonical edge-group order, then
        // run the Nodeblock per node group.
        for (int l = 0; l < num_layers; ++l) {
            Mat<S> agg(nodes[l].rows(), d_agg);
            for (int gi = 0; gi < num_edge_groups; ++gi) {
                if (static_cast<int>(p.edge_groups[gi].pair.outer) != l) continue;
                if (p.edge_groups[gi].size() == 0) continue;
                const Mat<S>& part = partials[gi];
                for (int r = 0; r < agg.rows(); ++r) {
                    for (int c = 0; c < d_agg; ++c) agg(r, c) = A::add(agg(r, c), part(r, c));
                }
            }
            nodes[l] = node_block<S>(nodes[l], agg, params.node_mlp);
        }
    }

    std::vector<S> scores(static_cast<std::size_t>(p.n_edges));
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const EdgeGroup& eg = p.edge_groups[gi];
        if (eg.size() == 0) continue;
        const int inner = static_cast<int>(eg.pair.inner);
        const int outer = static_cast<int>(eg.pair.outer);
        auto local = classify_edges<S>(nodes[inner], nodes[outer], eg.local_sender,
                                       eg.local_receiver, edges[gi], params.classifier_mlp);
        for (int i = 0; i < eg.size(); ++i) scores[eg.global_edge[i]] = local[i];
    }
    return scores;
}

}  // namespace

std::vector<Fx> infer_fixed(const HitGraph& g, const ModelParams& params, const InferConfig& cfg) {
    return infer_impl<Fx>(g, params, cfg);
}

std::vector<double> infer_real(const HitGraph& g, const ModelParams& params,
                               const InferConfig& cfg) {
    return infer_impl<double>(g, params, cfg);
}

std::vector<double> infer(const HitGraph& g, const ModelParams& params, const InferConfig& cfg) {
    if (cfg.mode == ArithMode::real) return infer_real(g, params, cfg);
    const auto fixed = infer_fixed(g, params, cfg);
    std::vector<double> out(fixed.size());
    for (std::size_t i = 0; i < fixed.size(); ++i) out[i] = fixed[i].value();
    return out;
}

std::vector<Fx> infer_partitioned_fixed(const Partition& p, const ModelParams& params,
                                        const InferConfig& cfg) {
    return infer_partitioned_impl<Fx>(p, params, cfg);
}

std::vector<double> infer_partitioned_real(const Partition& p, const ModelParams& params,
                                           const InferConfig& cfg) {
    return infer_partitioned_impl<double>(p, params, cfg);
}

std::vector<double> infer_partitioned(const Partition& p, const ModelParams& params,
                                      const InferConfig& cfg) {
    if (cfg.mode == ArithMode::real) return infer_partitioned_real(p, params, cfg);
    const auto fixed = infer_partitioned_fixed(p, params, cfg);
    std::vector<double> out(fixed.size());
    for (std::size_t i = 0; i < fixed.size(); ++i) out[i] = fixed[i].value();
    return out;
}

}  // namespace trackgnn
