#pragma once

// Shared fixtures for the test suites: randomized valid graphs, stress
// weights, and an independent fixed-point MLP evaluator used as the
// dual-implementation oracle.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "trackgnn/geom.hpp"
#include "trackgnn/inet.hpp"
#include "trackgnn/io.hpp"
#include "trackgnn/rng.hpp"

namespace testutil {

using namespace trackgnn;

// Random valid graph with node count roughly in [min_nodes, max_nodes].
// Every layer may be empty; edges only appear between non-empty legal pairs.
inline HitGraph random_graph(std::uint64_t seed, int min_nodes = 10, int max_nodes = 1000) {
    Rng rng(seed);
    const int target = min_nodes + rng.index(std::max(1, max_nodes - min_nodes + 1));
    SyntheticProfile profile;
    // Spread the node budget over a random subset of layers.
    int remaining = target;
    std::vector<int> order(num_layers);
    for (int i = 0; i < num_layers; ++i) order[i] = i;
    for (int i = num_layers - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    for (int k = 0; k < num_layers && remaining > 0; ++k) {
        const int take = k + 1 == num_layers ? remaining : rng.index(remaining + 1);
        profile.nodes_per_layer[order[k]] = take;
        remaining -= take;
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pair = legal_pairs()[gi];
        if (profile.nodes_per_layer[static_cast<int>(pair.inner)] == 0 ||
            profile.nodes_per_layer[static_cast<int>(pair.outer)] == 0) {
            continue;
        }
        profile.edges_per_pair[gi] = rng.index(2 * std::max(1, target / num_edge_groups) + 4);
    }
    return generate_synthetic(rng.next_u64(), profile);
}

// Full-range uniform weights (quantized copies included); wider than the
// library's fan-in-scaled init, so saturating code paths get exercised.
inline ModelParams stress_params(const InferConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    auto wide_mlp = [&](int in, int out) {
        Mlp mlp;
        std::vector<int> dims{in};
        for (int i = 0; i < cfg.hidden_depth; ++i) dims.push_back(cfg.hidden_width);
        dims.push_back(out);
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            Mat<double> w(dims[i + 1], dims[i]);
            std::vector<double> b(static_cast<std::size_t>(dims[i + 1]));
            for (auto& v : w.data()) v = rng.uniform(-1.0, 1.0);
            for (auto& v : b) v = rng.uniform(-1.0, 1.0);
            mlp.layers.push_back(make_layer(std::move(w), std::move(b)));
        }
        return mlp;
    };
    ModelParams p;
    p.edge_mlp = wide_mlp(2 * cfg.d_node + cfg.d_edge, cfg.d_edge);
    p.node_mlp = wide_mlp(cfg.d_node + cfg.d_edge, cfg.d_node);
    p.classifier_mlp = wide_mlp(2 * cfg.d_node + cfg.d_edge, 1);
    return p;
}

// Independent fixed-point MLP evaluation on raw integers: bias-first
// accumulation in ascending input index, round-half-even products,
// saturating adds. Shares no code with the library path.
inline std::vector<std::int32_t> oracle_mlp_raw(const Mlp& mlp,
                                                const std::vector<std::int32_t>& input) {
    auto sat = [](std::int64_t v) -> std::int32_t {
        if (v > 8191) return 8191;
        if (v < -8192) return -8192;
        return static_cast<std::int32_t>(v);
    };
    auto round_even = [](std::int64_t p) -> std::int64_t {
        std::int64_t q = p >> 7;
        const std::int64_t r = p - (q << 7);
        if (r > 64 || (r == 64 && (q & 1))) ++q;
        return q;
    };
    std::vector<std::int32_t> x = input;
    for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
        const auto& layer = mlp.layers[li];
        std::vector<std::int32_t> y(static_cast<std::size_t>(layer.out_dim()));
        for (int o = layer.out_dim() - 1; o >= 0; --o) {  // output order is free
            std::int32_t acc = layer.bias_fx[o].raw();
            for (int k = 0; k < layer.in_dim(); ++k) {
                const std::int64_t prod = static_cast<std::int64_t>(layer.weight_fx(o, k).raw()) *
                                          static_cast<std::int64_t>(x[k]);
                acc = sat(static_cast<std::int64_t>(acc) + sat(round_even(prod)));
            }
            if (li + 1 < mlp.layers.size() && acc < 0) acc = 0;
            y[o] = acc;
        }
        x = std::move(y);
    }
    return x;
}

inline std::int32_t oracle_hard_sigmoid_raw(std::int32_t raw) {
    // 0.125*x + 0.5 in raw units, round-half-even on the eighth.
    std::int64_t p = static_cast<std::int64_t>(raw) * 16;
    std::int64_t q = p >> 7;
    const std::int64_t r = p - (q << 7);
    if (r > 64 || (r == 64 && (q & 1))) ++q;
    q += 64;
    if (q < 0) return 0;
    if (q > 128) return 128;
    return static_cast<std::int32_t>(q);
}

}  // namespace testutil
