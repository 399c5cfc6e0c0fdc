#include "trackgnn/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "trackgnn/rng.hpp"

namespace trackgnn {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

template <typename T>
T parse_int(std::string_view s, const std::string& file, int line, const char* what) {
    T value{};
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(file, line, std::string("expected integer for ") + what + ", got '" +
                                         std::string(s) + "'");
    }
    return value;
}

}  // namespace

std::string graph_to_string(const HitGraph& g) {
    std::ostringstream os;
    os << "nodes," << g.num_nodes() << ',' << g.node_dim() << '\n';
    for (int v = 0; v < g.num_nodes(); ++v) {
        os << v << ',' << layer_name(g.node_layers[v]);
        for (int c = 0; c < g.node_dim(); ++c) os << ',' << g.node_features(v, c).raw();
        os << '\n';
    }
    os << "edges," << g.num_edges() << ',' << g.edge_dim() << '\n';
    for (int e = 0; e < g.num_edges(); ++e) {
        os << e << ',' << g.senders[e] << ',' << g.receivers[e];
        for (int c = 0; c < g.edge_dim(); ++c) os << ',' << g.edge_features(e, c).raw();
        os << '\n';
    }
    return os.str();
}

HitGraph graph_from_string(const std::string& text, const std::string& name) {
    HitGraph g;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;

    auto next_line = [&]() -> bool {
        if (!std::getline(is, line)) return false;
        ++lineno;
        return true;
    };

    if (!next_line()) throw ParseError(name, 1, "empty file, expected 'nodes' header");
    auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "nodes") {
        throw ParseError(name, lineno, "expected 'nodes,<count>,<dim>' header");
    }
    const int n = parse_int<int>(header[1], name, lineno, "node count");
    const int d_node = parse_int<int>(header[2], name, lineno, "node dim");
    if (n < 0 || d_node < 0) throw ParseError(name, lineno, "negative node table shape");

    g.node_features = Mat<Fx>(n, d_node);
    g.node_layers.resize(n);
    for (int v = 0; v < n; ++v) {
        if (!next_line()) throw ParseError(name, lineno + 1, "unexpected end of node table");
        auto fields = split_csv(line);
        if (static_cast<int>(fields.size()) != 2 + d_node) {
            throw ParseError(name, lineno, "node row needs id, layer and " +
                                               std::to_string(d_node) + " features");
        }
        const int id = parse_int<int>(fields[0], name, lineno, "node id");
        if (id != v) throw ParseError(name, lineno, "node ids must be dense and ascending");
        const auto layer = parse_layer(fields[1]);
        if (!layer) {
            throw ParseError(name, lineno, "unknown layer label '" + std::string(fields[1]) + "'");
        }
        g.node_layers[v] = *layer;
        for (int c = 0; c < d_node; ++c) {
            const int raw = parse_int<int>(fields[2 + c], name, lineno, "feature");
            if (raw < Fx::raw_min || raw > Fx::raw_max) {
                throw ParseError(name, lineno, "feature raw value out of 14-bit range");
            }
            g.node_features(v, c) = Fx::from_raw(raw);
        }
    }

    if (!next_line()) throw ParseError(name, lineno + 1, "expected 'edges' header");
    header = split_csv(line);
    if (header.size() != 3 || header[0] != "edges") {
        throw ParseError(name, lineno, "expected 'edges,<count>,<dim>' header");
    }
    const int m = parse_int<int>(header[1], name, lineno, "edge count");
    const int d_edge = parse_int<int>(header[2], name, lineno, "edge dim");
    if (m < 0 || d_edge < 0) throw ParseError(name, lineno, "negative edge table shape");

    g.edge_features = Mat<Fx>(m, d_edge);
    g.senders.resize(m);
    g.receivers.resize(m);
    for (int e = 0; e < m; ++e) {
        if (!next_line()) throw ParseError(name, lineno + 1, "unexpected end of edge table");
        auto fields = split_csv(line);
        if (static_cast<int>(fields.size()) != 3 + d_edge) {
            throw ParseError(name, lineno, "edge row needs id, sender, receiver and " +
                                               std::to_string(d_edge) + " features");
        }
        const int id = parse_int<int>(fields[0], name, lineno, "edge id");
        if (id != e) throw ParseError(name, lineno, "edge ids must be dense and ascending");
        const int s = parse_int<int>(fields[1], name, lineno, "sender");
        const int r = parse_int<int>(fields[2], name, lineno, "receiver");
        if (s < 0 || s >= n || r < 0 || r >= n) {
            throw ParseError(name, lineno,
                             "edge references node out of range 0.." + std::to_string(n - 1));
        }
        g.senders[e] = s;
        g.receivers[e] = r;
        for (int c = 0; c < d_edge; ++c) {
            const int raw = parse_int<int>(fields[3 + c], name, lineno, "feature");
            if (raw < Fx::raw_min || raw > Fx::raw_max) {
                throw ParseError(name, lineno, "feature raw value out of 14-bit range");
            }
            g.edge_features(e, c) = Fx::from_raw(raw);
        }
    }
    while (next_line()) {
        if (!line.empty()) throw ParseError(name, lineno, "trailing content after edge table");
    }
    return g;
}

HitGraph load_graph(const std::filesystem::path& path) {
    return graph_from_string(read_text_file(path), path.string());
}

void save_graph(const HitGraph& g, const std::filesystem::path& path) {
    write_text_file(path, graph_to_string(g));
}

namespace {

nlohmann::json mlp_to_json(const Mlp& mlp) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : mlp.layers) {
        nlohmann::json j;
        j["rows"] = layer.out_dim();
        j["cols"] = layer.in_dim();
        j["weight_real"] = layer.weight_real.data();
        j["bias_real"] = layer.bias_real;
        std::vector<int> wraw, braw;
        for (const auto& v : layer.weight_fx.data()) wraw.push_back(v.raw());
        for (const auto& v : layer.bias_fx) braw.push_back(v.raw());
        j["weight_raw"] = wraw;
        j["bias_raw"] = braw;
        layers.push_back(std::move(j));
    }
    return layers;
}

Mlp mlp_from_json(const nlohmann::json& layers, const std::string& file) {
    Mlp mlp;
    for (const auto& j : layers) {
        const int rows = j.at("rows").get<int>();
        const int cols = j.at("cols").get<int>();
        const auto wr = j.at("weight_real").get<std::vector<double>>();
        const auto br = j.at("bias_real").get<std::vector<double>>();
        const auto wq = j.at("weight_raw").get<std::vector<int>>();
        const auto bq = j.at("bias_raw").get<std::vector<int>>();
        if (static_cast<int>(wr.size()) != rows * cols ||
            static_cast<int>(br.size()) != rows || wq.size() != wr.size() ||
            bq.size() != br.size()) {
            throw std::runtime_error(file + ": layer shape does not match array sizes");
        }
        Mat<double> w(rows, cols);
        w.data() = wr;
        LinearLayer layer = make_layer(std::move(w), br);
        for (std::size_t i = 0; i < wq.size(); ++i) {
            if (layer.weight_fx.data()[i].raw() != wq[i]) {
                throw std::runtime_error(file +
                                         ": quantized weights do not match their real values");
            }
        }
        for (std::size_t i = 0; i < bq.size(); ++i) {
            if (layer.bias_fx[i].raw() != bq[i]) {
                throw std::runtime_error(file + ": quantized bias does not match its real value");
            }
        }
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

}  // namespace

void save_weights(const ModelParams& params, const InferConfig& cfg,
                  const std::filesystem::path& path) {
    nlohmann::json j;
    j["config"] = {{"d_node", cfg.d_node},
                   {"d_edge", cfg.d_edge},
                   {"hidden_width", cfg.hidden_width},
                   {"hidden_depth", cfg.hidden_depth},
                   {"iterations", cfg.iterations}};
    j["edge_mlp"] = mlp_to_json(params.edge_mlp);
    j["node_mlp"] = mlp_to_json(params.node_mlp);
    j["classifier_mlp"] = mlp_to_json(params.classifier_mlp);
    write_text_file(path, j.dump(2) + "\n");
}

std::pair<ModelParams, InferConfig> load_weights(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), 1, e.what());
    }
    InferConfig cfg;
    const auto& c = j.at("config");
    cfg.d_node = c.at("d_node").get<int>();
    cfg.d_edge = c.at("d_edge").get<int>();
    cfg.hidden_width = c.at("hidden_width").get<int>();
    cfg.hidden_depth = c.at("hidden_depth").get<int>();
    cfg.iterations = c.at("iterations").get<int>();
    ModelParams params;
    params.edge_mlp = mlp_from_json(j.at("edge_mlp"), path.string());
    params.node_mlp = mlp_from_json(j.at("node_mlp"), path.string());
    params.classifier_mlp = mlp_from_json(j.at("classifier_mlp"), path.string());
    check_shapes(params, cfg);
    return {std::move(params), cfg};
}

SyntheticProfile nominal_profile() { return profile_from_totals(nominal_nodes, nominal_edges); }

SyntheticProfile profile_from_totals(int n_nodes, int n_edges) {
    const GroupWorkloads split = proportional_workloads(n_nodes, n_edges);
    SyntheticProfile p;
    p.nodes_per_layer = split.node_sizes;
    p.edges_per_pair = split.edge_sizes;
    return p;
}

HitGraph generate_synthetic(std::uint64_t seed, const SyntheticProfile& profile) {
    for (int c : profile.nodes_per_layer) {
        if (c < 0) throw std::invalid_argument("generate_synthetic: negative node count");
    }
    for (int c : profile.edges_per_pair) {
        if (c < 0) throw std::invalid_argument("generate_synthetic: negative edge count");
    }

    Rng rng(seed);
    HitGraph g;
    int n = 0;
    for (int c : profile.nodes_per_layer) n += c;
    g.node_features = Mat<Fx>(n, profile.d_node);
    g.node_layers.resize(n);

    std::array<std::vector<std::int32_t>, num_layers> by_layer;
    int v = 0;
    for (int l = 0; l < num_layers; ++l) {
        for (int k = 0; k < profile.nodes_per_layer[l]; ++k, ++v) {
            g.node_layers[v] = static_cast<LayerId>(l);
            by_layer[l].push_back(v);
            for (int c = 0; c < profile.d_node; ++c) {
                g.node_features(v, c) = quantize(rng.uniform(-1.0, 1.0));
            }
        }
    }

    int m = 0;
    for (int c : profile.edges_per_pair) m += c;
    g.edge_features = Mat<Fx>(m, profile.d_edge);
    g.senders.resize(m);
    g.receivers.resize(m);
    int e = 0;
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pair = legal_pairs()[gi];
        const auto& inner = by_layer[static_cast<int>(pair.inner)];
        const auto& outer = by_layer[static_cast<int>(pair.outer)];
        const int count = profile.edges_per_pair[gi];
        if (count > 0 && (inner.empty() || outer.empty())) {
            throw std::invalid_argument("generate_synthetic: edges requested for empty group " +
                                        pair_name(pair));
        }
        for (int k = 0; k < count; ++k, ++e) {
            g.senders[e] = inner[rng.index(static_cast<int>(inner.size()))];
            g.receivers[e] = outer[rng.index(static_cast<int>(outer.size()))];
            for (int c = 0; c < profile.d_edge; ++c) {
                g.edge_features(e, c) = quantize(rng.uniform(-1.0, 1.0));
            }
        }
    }
    return g;
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string report_csv_header() {
    return "variant,pes,clock_mhz,latency_cycles,interval_cycles,latency_us,interval_us,mgps,"
           "deadlock,total_brams,node_array_bits_per_pe,multipliers,register_bits\n";
}

std::string report_csv_row(const SimReport& r, const ResourceEstimate* res) {
    std::ostringstream os;
    os << variant_name(r.variant) << ',' << r.total_pes << ',' << fixed6(r.clock_mhz) << ','
       << r.latency_cycles << ',' << r.interval_cycles << ',';
    if (r.deadlock) {
        os << ",,,1";
    } else {
        os << fixed6(r.latency_us()) << ',' << fixed6(r.interval_us()) << ','
           << trunc3(r.mgps()) << ",0";
    }
    if (res) {
        os << ',' << res->total_brams << ',' << res->node_array_bits_per_pe_max << ','
           << res->multipliers << ',' << res->register_bits;
    } else {
        os << ",,,,";
    }
    os << '\n';
    return os.str();
}

std::string report_json(const SimReport& r, const ResourceEstimate* res) {
    nlohmann::json j;
    j["variant"] = variant_name(r.variant);
    j["pe_desc"] = r.pe_desc;
    j["total_pes"] = r.total_pes;
    j["clock_mhz"] = r.clock_mhz;
    j["deadlock"] = r.deadlock;
    if (r.deadlock) {
        j["deadlock_channel"] = r.deadlock_channel;
        j["deadlock_cycle"] = r.deadlock_cycle;
    } else {
        j["latency_cycles"] = r.latency_cycles;
        j["interval_cycles"] = r.interval_cycles;
        j["latency_us"] = r.latency_us();
        j["interval_us"] = r.interval_us();
        j["mgps"] = r.mgps();
        j["mgps_display"] = trunc3(r.mgps());
    }
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : r.stages) {
        stages.push_back({{"name", s.name}, {"busy", s.busy}, {"stall", s.stall}});
    }
    j["stages"] = std::move(stages);
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& c : r.channels) {
        channels.push_back({{"name", c.name}, {"capacity", c.capacity}, {"peak", c.peak}});
    }
    j["channels"] = std::move(channels);
    if (res) {
        j["resources"] = {{"total_brams", res->total_brams},
                          {"node_array_brams", res->node_array_brams},
                          {"fifo_brams", res->fifo_brams},
                          {"node_array_bits_per_pe_max", res->node_array_bits_per_pe_max},
                          {"node_array_bits_total", res->node_array_bits_total},
                          {"multipliers", res->multipliers},
                          {"register_bits", res->register_bits}};
    }
    return j.dump(2) + "\n";
}

std::string allocation_csv(const Allocation& a, const GroupWorkloads& w) {
    std::ostringstream os;
    os << "kind,group,type,size,nodeblock_pes,edgeblock_pes,aggregate_pes\n";
    for (int l = 0; l < num_layers; ++l) {
        const auto layer = static_cast<LayerId>(l);
        os << "node," << layer_name(layer) << ','
           << (layer_type(layer) == GroupType::A ? 'A' : 'B') << ',' << w.node_sizes[l] << ','
           << a.nodeblock_pes[l] << ",,\n";
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pair = legal_pairs()[gi];
        const char* type = pair_type(pair) == PairType::AA   ? "A-A"
                           : pair_type(pair) == PairType::AB ? "A-B"
                                                             : "B-B";
        os << "edge," << pair_name(pair) << ',' << type << ',' << w.edge_sizes[gi] << ",,"
           << a.edgeblock_pes[gi] << ',' << a.aggregate_pes[gi] << '\n';
    }
    return os.str();
}

std::string allocation_json(const Allocation& a, const GroupWorkloads& w) {
    nlohmann::json j;
    nlohmann::json nodes = nlohmann::json::array();
    for (int l = 0; l < num_layers; ++l) {
        const auto layer = static_cast<LayerId>(l);
        nodes.push_back({{"group", std::string(layer_name(layer))},
                         {"type", layer_type(layer) == GroupType::A ? "A" : "B"},
                         {"size", w.node_sizes[l]},
                         {"pes", a.nodeblock_pes[l]}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pair = legal_pairs()[gi];
        edges.push_back({{"group", pair_name(pair)},
                         {"type", pair_type(pair) == PairType::AA   ? "A-A"
                                  : pair_type(pair) == PairType::AB ? "A-B"
                                                                    : "B-B"},
                         {"size", w.edge_sizes[gi]},
                         {"edgeblock_pes", a.edgeblock_pes[gi]},
                         {"aggregate_pes", a.aggregate_pes[gi]}});
    }
    j["node_groups"] = std::move(nodes);
    j["edge_groups"] = std::move(edges);
    j["totals"] = {{"nodeblock", a.total_nodeblock()},
                   {"edgeblock", a.total_edgeblock()},
                   {"aggregate", a.total_aggregate()},
                   {"all", a.total()}};
    return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << content;
    if (content.empty() || content.back() != '\n') os << '\n';
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace trackgnn
