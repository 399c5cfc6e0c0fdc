#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackgnn/fxp.hpp"
#include "trackgnn/geom.hpp"
#include "trackgnn/tensor.hpp"

namespace trackgnn {

// One dense layer, stored both as the original reals and as their quantized
// counterparts. The fixed-point entries always equal quantize(real entry).
struct LinearLayer {
    Mat<double> weight_real;  // out x in
    std::vector<double> bias_real;
    Mat<Fx> weight_fx;
    std::vector<Fx> bias_fx;

    int in_dim() const { return weight_real.cols(); }
    int out_dim() const { return weight_real.rows(); }
};

LinearLayer make_layer(Mat<double> weight, std::vector<double> bias);

// ReLU after every layer except the last; the last layer is linear.
struct Mlp {
    std::vector<LinearLayer> layers;

    int in_dim() const { return layers.front().in_dim(); }
    int out_dim() const { return layers.back().out_dim(); }
};

struct ModelParams {
    Mlp edge_mlp;        // [2*d_node + d_edge] -> d_edge
    Mlp node_mlp;        // [d_node + d_edge] -> d_node
    Mlp classifier_mlp;  // [2*d_node + d_edge] -> 1
};

enum class ArithMode { real, fixed };

struct InferConfig {
    int d_node = 3;
    int d_edge = 4;
    int hidden_width = 8;
    int hidden_depth = 2;
    int iterations = 1;
    ArithMode mode = ArithMode::fixed;
};

// Throws std::invalid_argument on non-positive dimensions or iterations < 1.
void validate_config(const InferConfig& cfg);

// Checks that params chain correctly for cfg's dimensions and that g (when
// given) matches them.
void check_shapes(const ModelParams& params, const InferConfig& cfg, const HitGraph* g = nullptr);

// Weights and biases uniform in [-1, 1], quantized copies included.
ModelParams random_params(const InferConfig& cfg, std::uint64_t seed);

// All-zero weights and biases (useful as a fixture).
ModelParams zero_params(const InferConfig& cfg);

namespace detail {

template <typename S>
struct Arith;

template <>
struct Arith<Fx> {
    static Fx add(Fx a, Fx b) { return fx_add(a, b); }
    static Fx mul(Fx a, Fx b) { return fx_mul(a, b); }
    static Fx relu(Fx a) { return fx_relu(a); }
    static Fx hard_sigmoid(Fx a) { return fx_hard_sigmoid(a); }
    static Fx from_fx(Fx v) { return v; }
    static Fx weight(const LinearLayer& l, int o, int k) { return l.weight_fx(o, k); }
    static Fx bias(const LinearLayer& l, int o) { return l.bias_fx[o]; }
};

template <>
struct Arith<double> {
    static double add(double a, double b) { return a + b; }
    static double mul(double a, double b) { return a * b; }
    static double relu(double a) { return a > 0.0 ? a : 0.0; }
    static double hard_sigmoid(double a) {
        const double y = 0.125 * a + 0.5;
        if (y < 0.0) return 0.0;
        if (y > 1.0) return 1.0;
        return y;
    }
    static double from_fx(Fx v) { return v.value(); }
    static double weight(const LinearLayer& l, int o, int k) { return l.weight_real(o, k); }
    static double bias(const LinearLayer& l, int o) { return l.bias_real[o]; }
};

template <typename S>
Mat<S> to_mat(const Mat<Fx>& m) {
    Mat<S> out(m.rows(), m.cols());
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) out(r, c) = Arith<S>::from_fx(m(r, c));
    }
    return out;
}

// Dot products accumulate in ascending input index starting from the bias,
// matching the deterministic adder-tree contract.
template <typename S>
void mlp_eval(const Mlp& mlp, std::span<const S> input, std::vector<S>& out,
              std::vector<S>& scratch) {
    using A = Arith<S>;
    scratch.assign(input.begin(), input.end());
    for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
        const LinearLayer& layer = mlp.layers[li];
        const bool last = li + 1 == mlp.layers.size();
        out.resize(layer.out_dim());
        for (int o = 0; o < layer.out_dim(); ++o) {
            S acc = A::bias(layer, o);
            for (int k = 0; k < layer.in_dim(); ++k) {
                acc = A::add(acc, A::mul(A::weight(layer, o, k), scratch[k]));
            }
            out[o] = last ? acc : A::relu(acc);
        }
        if (!last) scratch = out;
    }
}

}  // namespace detail

// e'_{i,j} = MLP_edge([X_i || X_j || e_{i,j}]) per edge; sender features come
// from sender_feats, receiver features from receiver_feats (the same matrix
// for whole-graph use, two node-group matrices for partitioned use).
template <typename S>
Mat<S> edge_block(const Mat<S>& sender_feats, const Mat<S>& receiver_feats,
                  std::span<const std::int32_t> senders, std::span<const std::int32_t> receivers,
                  const Mat<S>& edge_feats, const Mlp& edge_mlp) {
    const int m = edge_feats.rows();
    const int d_node = sender_feats.cols();
    const int d_edge = edge_feats.cols();
    if (edge_mlp.in_dim() != 2 * d_node + d_edge) {
        throw std::invalid_argument("edge_block: MLP input dim mismatch");
    }
    Mat<S> out(m, edge_mlp.out_dim());
    std::vector<S> input(static_cast<std::size_t>(2 * d_node + d_edge));
    std::vector<S> result, scratch;
    for (int e = 0; e < m; ++e) {
        const int i = senders[e];
        const int j = receivers[e];
        for (int c = 0; c < d_node; ++c) input[c] = sender_feats(i, c);
        for (int c = 0; c < d_node; ++c) input[d_node + c] = receiver_feats(j, c);
        for (int c = 0; c < d_edge; ++c) input[2 * d_node + c] = edge_feats(e, c);
        detail::mlp_eval<S>(edge_mlp, input, result, scratch);
        for (int c = 0; c < out.cols(); ++c) out(e, c) = result[c];
    }
    return out;
}

// out[v] = sum of edge_feats rows with receiver v, accumulated in ascending
// edge id. Nodes with no incoming edge get zeros.
template <typename S>
Mat<S> aggregate(const Mat<S>& edge_feats, std::span<const std::int32_t> receivers, int n_nodes) {
    using A = detail::Arith<S>;
    if (static_cast<int>(receivers.size()) != edge_feats.rows()) {
        throw std::invalid_argument("aggregate: receiver count mismatch");
    }
    Mat<S> out(n_nodes, edge_feats.cols());
    for (int e = 0; e < edge_feats.rows(); ++e) {
        const int v = receivers[e];
        if (v < 0 || v >= n_nodes) throw std::out_of_range("aggregate: receiver out of range");
        for (int c = 0; c < edge_feats.cols(); ++c) out(v, c) = A::add(out(v, c), edge_feats(e, c));
    }
    return out;
}

// Canonical two-level aggregation: per-group partial sums (ascending edge id
// within the group), merged group-major in legal_pairs() order. This is the
// accumulation order infer() uses, and what makes partitioned inference
// bit-identical even under saturation.
template <typename S>
Mat<S> aggregate_grouped(const Mat<S>& edge_feats, std::span<const std::int32_t> receivers,
                         std::span<const std::int8_t> group_of_edge, int n_nodes) {
    using A = detail::Arith<S>;
    Mat<S> out(n_nodes, edge_feats.cols());
    Mat<S> partial(n_nodes, edge_feats.cols());
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        for (auto& v : partial.data()) v = S{};
        bool touched = false;
        for (int e = 0; e < edge_feats.rows(); ++e) {
            if (group_of_edge[e] != gi) continue;
            touched = true;
            const int v = receivers[e];
            if (v < 0 || v >= n_nodes) {
                throw std::out_of_range("aggregate_grouped: receiver out of range");
            }
            for (int c = 0; c < edge_feats.cols(); ++c) {
                partial(v, c) = A::add(partial(v, c), edge_feats(e, c));
            }
        }
        if (!touched) continue;
        for (int v = 0; v < n_nodes; ++v) {
            for (int c = 0; c < edge_feats.cols(); ++c) out(v, c) = A::add(out(v, c), partial(v, c));
        }
    }
    return out;
}

// X'_v = MLP_node([X_v || agg_v]) per node.
template <typename S>
Mat<S> node_block(const Mat<S>& node_feats, const Mat<S>& aggregated, const Mlp& node_mlp) {
    if (aggregated.rows() != node_feats.rows()) {
        throw std::invalid_argument("node_block: row count mismatch");
    }
    if (node_mlp.in_dim() != node_feats.cols() + aggregated.cols()) {
        throw std::invalid_argument("node_block: MLP input dim mismatch");
    }
    Mat<S> out(node_feats.rows(), node_mlp.out_dim());
    std::vector<S> input(static_cast<std::size_t>(node_mlp.in_dim()));
    std::vector<S> result, scratch;
    for (int v = 0; v < node_feats.rows(); ++v) {
        for (int c = 0; c < node_feats.cols(); ++c) input[c] = node_feats(v, c);
        for (int c = 0; c < aggregated.cols(); ++c) input[node_feats.cols() + c] = aggregated(v, c);
        detail::mlp_eval<S>(node_mlp, input, result, scratch);
        for (int c = 0; c < out.cols(); ++c) out(v, c) = result[c];
    }
    return out;
}

// score_{i,j} = hard_sigmoid(MLP_cls([X'_i || X'_j || e'_{i,j}])).
template <typename S>
std::vector<S> classify_edges(const Mat<S>& sender_feats, const Mat<S>& receiver_feats,
                              std::span<const std::int32_t> senders,
                              std::span<const std::int32_t> receivers, const Mat<S>& edge_feats,
                              const Mlp& classifier_mlp) {
    using A = detail::Arith<S>;
    const int d_node = sender_feats.cols();
    const int d_edge = edge_feats.cols();
    if (classifier_mlp.in_dim() != 2 * d_node + d_edge || classifier_mlp.out_dim() != 1) {
        throw std::invalid_argument("classify_edges: MLP shape mismatch");
    }
    std::vector<S> scores(edge_feats.rows());
    std::vector<S> input(static_cast<std::size_t>(2 * d_node + d_edge));
    std::vector<S> result, scratch;
    for (int e = 0; e < edge_feats.rows(); ++e) {
        const int i = senders[e];
        const int j = receivers[e];
        for (int c = 0; c < d_node; ++c) input[c] = sender_feats(i, c);
        for (int c = 0; c < d_node; ++c) input[d_node + c] = receiver_feats(j, c);
        for (int c = 0; c < d_edge; ++c) input[2 * d_node + c] = edge_feats(e, c);
        detail::mlp_eval<S>(classifier_mlp, input, result, scratch);
        scores[e] = A::hard_sigmoid(result[0]);
    }
    return scores;
}

// Whole-graph inference: (edge_block -> aggregate -> node_block) for
// cfg.iterations passes, then classify_edges.
std::vector<Fx> infer_fixed(const HitGraph& g, const ModelParams& params, const InferConfig& cfg);
std::vector<double> infer_real(const HitGraph& g, const ModelParams& params,
                               const InferConfig& cfg);
std::vector<double> infer(const HitGraph& g, const ModelParams& params, const InferConfig& cfg);

// Partitioned inference over the 13 edge-group subgraphs; scores return in
// global edge order. Bit-identical to infer_fixed in fixed mode.
std::vector<Fx> infer_partitioned_fixed(const Partition& p, const ModelParams& params,
                                        const InferConfig& cfg);
std::vector<double> infer_partitioned_real(const Partition& p, const ModelParams& params,
                                           const InferConfig& cfg);
std::vector<double> infer_partitioned(const Partition& p, const ModelParams& params,
                                      const InferConfig& cfg);

}  // namespace trackgnn
