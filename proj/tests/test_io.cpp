#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "test_util.hpp"
#include "trackgnn/io.hpp"

using namespace trackgnn;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "trackgnn_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("graph round trip is byte-identical for canonical files") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const HitGraph g = testutil::random_graph(seed, 20, 150);
        const std::string text = graph_to_string(g);
        const HitGraph back = graph_from_string(text);
        CHECK(back.node_features == g.node_features);
        CHECK(back.node_layers == g.node_layers);
        CHECK(back.edge_features == g.edge_features);
        CHECK(back.senders == g.senders);
        CHECK(back.receivers == g.receivers);
        CHECK(graph_to_string(back) == text);
    }

    const HitGraph g = testutil::random_graph(9, 50, 120);
    const auto path = temp_file("roundtrip.csv");
    save_graph(g, path);
    const std::string bytes = read_text_file(path);
    save_graph(load_graph(path), path);
    CHECK(read_text_file(path) == bytes);
}

TEST_CASE("empty tables load as an empty graph") {
    const HitGraph g = graph_from_string("nodes,0,3\nedges,0,4\n");
    CHECK(g.num_nodes() == 0);
    CHECK(g.num_edges() == 0);
    CHECK(g.node_dim() == 3);
    CHECK(g.edge_dim() == 4);
}

TEST_CASE("parse errors carry line numbers") {
    // Edge references node 999 of 10 -> error on the edge row (line 13).
    std::string text = "nodes,10,1\n";
    for (int v = 0; v < 10; ++v) text += std::to_string(v) + ",B1,0\n";
    text += "edges,1,1\n";
    text += "0,0,999,0\n";
    try {
        graph_from_string(text, "bad.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 13);
        CHECK(e.file() == "bad.csv");
    }

    CHECK_THROWS_AS(graph_from_string(""), ParseError);
    CHECK_THROWS_AS(graph_from_string("nodes,1,1\n0,Q9,0\nedges,0,1\n"), ParseError);
    CHECK_THROWS_AS(graph_from_string("nodes,1,1\n0,B1,xyz\nedges,0,1\n"), ParseError);
    CHECK_THROWS_AS(graph_from_string("nodes,1,1\n0,B1,0\nedges,1,1\n0,0,0\n"), ParseError);
    CHECK_THROWS_AS(graph_from_string("nodes,1,1\n0,B1,9999\nedges,0,1\n"), ParseError);
    CHECK_THROWS_AS(graph_from_string("nodes,2,1\n1,B1,0\n0,B1,0\nedges,0,1\n"), ParseError);
}

TEST_CASE("weights round trip and quantization consistency check") {
    InferConfig cfg;
    cfg.hidden_width = 4;
    const ModelParams params = random_params(cfg, 21);
    const auto path = temp_file("weights.json");
    save_weights(params, cfg, path);

    const auto [back, back_cfg] = load_weights(path);
    CHECK(back_cfg.d_node == cfg.d_node);
    CHECK(back_cfg.hidden_width == 4);
    REQUIRE(back.edge_mlp.layers.size() == params.edge_mlp.layers.size());
    for (std::size_t i = 0; i < back.edge_mlp.layers.size(); ++i) {
        CHECK(back.edge_mlp.layers[i].weight_real == params.edge_mlp.layers[i].weight_real);
        CHECK(back.edge_mlp.layers[i].weight_fx == params.edge_mlp.layers[i].weight_fx);
    }

    // Byte-stable second save.
    const std::string bytes = read_text_file(path);
    save_weights(back, back_cfg, path);
    CHECK(read_text_file(path) == bytes);

    // Tampering with a raw value breaks the quantization invariant.
    std::string tampered = bytes;
    const auto pos = tampered.find("\"weight_raw\": [");
    REQUIRE(pos != std::string::npos);
    const auto vstart = tampered.find_first_of("-0123456789", pos + 15);
    const auto vend = tampered.find_first_of(",]", vstart);
    const int old_raw = std::stoi(tampered.substr(vstart, vend - vstart));
    tampered.replace(vstart, vend - vstart, std::to_string(old_raw == 0 ? 5 : 0));
    const auto bad_path = temp_file("weights_bad.json");
    write_text_file(bad_path, tampered);
    CHECK_THROWS(load_weights(bad_path));
}

TEST_CASE("synthetic default profile hits the nominal size exactly") {
    const SyntheticProfile profile = nominal_profile();
    int nodes = 0, edges = 0;
    for (int c : profile.nodes_per_layer) nodes += c;
    for (int c : profile.edges_per_pair) edges += c;
    CHECK(nodes == 739);
    CHECK(edges == 1252);

    const HitGraph g = generate_synthetic(123, profile);
    CHECK(g.num_nodes() == 739);
    CHECK(g.num_edges() == 1252);
    CHECK(validate(g).ok());

    // Layer occupancies match the profile exactly.
    std::array<int, num_layers> counts{};
    for (const LayerId l : g.node_layers) counts[static_cast<int>(l)] += 1;
    CHECK(counts == profile.nodes_per_layer);
}

TEST_CASE("synthetic generation is deterministic and supports empty profiles") {
    const SyntheticProfile profile = nominal_profile();
    const HitGraph a = generate_synthetic(42, profile);
    const HitGraph b = generate_synthetic(42, profile);
    CHECK(graph_to_string(a) == graph_to_string(b));
    const HitGraph c = generate_synthetic(43, profile);
    CHECK(graph_to_string(a) != graph_to_string(c));

    const HitGraph empty = generate_synthetic(1, SyntheticProfile{});
    CHECK(empty.num_nodes() == 0);
    CHECK(empty.num_edges() == 0);

    SyntheticProfile impossible;
    impossible.edges_per_pair[0] = 5;  // edges without nodes
    CHECK_THROWS_AS(generate_synthetic(1, impossible), std::invalid_argument);

    // Features live in the quantized [-1, 1] band.
    const HitGraph g = generate_synthetic(11, profile);
    for (const auto& v : g.node_features.data()) CHECK(std::abs(v.value()) <= 1.0);
    for (const auto& v : g.edge_features.data()) CHECK(std::abs(v.value()) <= 1.0);
}

TEST_CASE("report rows are stable and carry the truncated throughput") {
    SimReport r;
    r.variant = Variant::mpa_geo_rsrc;
    r.total_pes = 59;
    r.clock_mhz = 200.0;
    r.latency_cycles = 414;
    r.interval_cycles = 62;
    const std::string row = report_csv_row(r);
    CHECK(row.find("mpa_geo_rsrc,59,") == 0);
    CHECK(row.find("3.225") != std::string::npos);
    CHECK(report_csv_header().find("interval_us") != std::string::npos);

    const std::string j = report_json(r);
    CHECK(j.find("\"mgps_display\": \"3.225\"") != std::string::npos);
}

TEST_CASE("allocation tables include every group") {
    const GroupWorkloads w = make_workloads(138, 62, 277, 77, 87);
    const Allocation a = allocate_data_aware(w);
    const std::string csv = allocation_csv(a, w);
    CHECK(csv.find("node,B1,A,138,2,,\n") != std::string::npos);
    CHECK(csv.find("edge,B1-B2,A-A,277,,4,4\n") != std::string::npos);
    CHECK(csv.find("edge,E6-E7,B-B,87,,1,1\n") != std::string::npos);
    int lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 1 + num_layers + num_edge_groups);
}
