#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "trackgnn/alloc.hpp"
#include "trackgnn/dfsim.hpp"
#include "trackgnn/geom.hpp"
#include "trackgnn/inet.hpp"

namespace trackgnn {

class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

// Graph files are comma-separated text with a node table and an edge table:
//   nodes,<count>,<dim>
//   <id>,<layer>,<f0>,...        features as raw 14-bit signed integers
//   edges,<count>,<dim>
//   <id>,<sender>,<receiver>,<f0>,...
// Row ids must be dense and ascending, which makes save(load(f)) == f at the
// byte level for canonical files.
HitGraph load_graph(const std::filesystem::path& path);
void save_graph(const HitGraph& g, const std::filesystem::path& path);
std::string graph_to_string(const HitGraph& g);
HitGraph graph_from_string(const std::string& text, const std::string& name = "<string>");

// Weight files are JSON carrying layer shapes, the real-valued entries, and
// their raw quantized counterparts. Loading verifies raw == quantize(real).
void save_weights(const ModelParams& params, const InferConfig& cfg,
                  const std::filesystem::path& path);
std::pair<ModelParams, InferConfig> load_weights(const std::filesystem::path& path);

struct SyntheticProfile {
    std::array<int, num_layers> nodes_per_layer{};
    std::array<int, num_edge_groups> edges_per_pair{};
    int d_node = 3;
    int d_edge = 4;
};

// 739 nodes / 1252 edges apportioned in the published type ratios.
SyntheticProfile nominal_profile();
SyntheticProfile profile_from_totals(int n_nodes, int n_edges);

// Deterministic synthetic graph: layer occupancies match the profile
// exactly, every edge is legal, features uniform in [-1, 1] then quantized.
HitGraph generate_synthetic(std::uint64_t seed, const SyntheticProfile& profile);

// Report emission (comma-separated rows plus JSON for programmatic use).
std::string report_csv_header();
std::string report_csv_row(const SimReport& r, const ResourceEstimate* res = nullptr);
std::string report_json(const SimReport& r, const ResourceEstimate* res = nullptr);
std::string allocation_csv(const Allocation& a, const GroupWorkloads& w);
std::string allocation_json(const Allocation& a, const GroupWorkloads& w);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace trackgnn
