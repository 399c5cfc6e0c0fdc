// trackgnn — quantized interaction-network inference and dataflow performance
// model for geometry-constrained tracking graphs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "trackgnn/dfsim.hpp"
#include "trackgnn/geom.hpp"
#include "trackgnn/inet.hpp"
#include "trackgnn/io.hpp"

namespace fs = std::filesystem;
using namespace trackgnn;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_parse = 2;
constexpr int exit_validation = 3;
constexpr int exit_requirement = 4;

struct CommonOpts {
    std::uint64_t seed = 1;
    double clock_mhz = 200.0;
    std::string out_dir = ".";
};

fs::path out_path(const CommonOpts& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir) / name;
}

Variant parse_variant(const std::string& v) {
    if (v == "mpa") return Variant::mpa;
    if (v == "geo") return Variant::mpa_geo;
    if (v == "geo-rsrc") return Variant::mpa_geo_rsrc;
    throw CLI::ValidationError("--variant", "expected mpa|geo|geo-rsrc");
}

Workload make_workload(const std::string& graph_path, int nodes, int edges) {
    if (!graph_path.empty()) {
        const HitGraph g = load_graph(graph_path);
        return workload_from_partition(partition(g));
    }
    return workload_from_totals(nodes, edges);
}

GroupWorkloads group_workloads(const Workload& w) {
    GroupWorkloads gw;
    gw.node_sizes = w.nodes_per_group;
    gw.edge_sizes = w.edges_per_group;
    return gw;
}

std::string score_line(int e, std::optional<Fx> fx, std::optional<double> real) {
    char buf[96];
    if (fx && real) {
        std::snprintf(buf, sizeof(buf), "%d,%.7f,%.9f,%.9f", e, fx->value(), *real,
                      std::abs(fx->value() - *real));
    } else if (fx) {
        std::snprintf(buf, sizeof(buf), "%d,%.7f", e, fx->value());
    } else {
        std::snprintf(buf, sizeof(buf), "%d,%.9f", e, *real);
    }
    return buf;
}

int cmd_generate(const CommonOpts& common, int nodes, int edges, const std::string& graph_out,
                 const std::string& weights_out) {
    const SyntheticProfile profile = profile_from_totals(nodes, edges);
    const HitGraph g = generate_synthetic(common.seed, profile);
    const auto path = graph_out.empty() ? out_path(common, "graph.csv") : fs::path(graph_out);
    save_graph(g, path);
    std::cout << "wrote " << path.string() << " (" << g.num_nodes() << " nodes, "
              << g.num_edges() << " edges)\n";
    if (!weights_out.empty()) {
        InferConfig cfg;
        cfg.d_node = profile.d_node;
        cfg.d_edge = profile.d_edge;
        save_weights(random_params(cfg, common.seed), cfg, weights_out);
        std::cout << "wrote " << weights_out << "\n";
    }
    return exit_ok;
}

int cmd_validate(const std::string& graph_path) {
    const HitGraph g = load_graph(graph_path);
    const ValidationReport report = validate(g);
    if (report.ok()) {
        std::cout << "valid: " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
        return exit_ok;
    }
    std::cout << report.to_string() << "\n";
    return exit_validation;
}

int cmd_partition(const CommonOpts& common, const std::string& graph_path) {
    const HitGraph g = load_graph(graph_path);
    const Partition p = partition(g);
    std::ostringstream os;
    os << "kind,group,size\n";
    for (int l = 0; l < num_layers; ++l) {
        os << "node," << layer_name(static_cast<LayerId>(l)) << ','
           << p.node_groups[l].size() << '\n';
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        os << "edge," << pair_name(p.edge_groups[gi].pair) << ',' << p.edge_groups[gi].size()
           << '\n';
    }
    const auto path = out_path(common, "partition.csv");
    write_text_file(path, os.str());
    std::cout << "wrote " << path.string() << " (11 node groups, 13 edge groups)\n";
    return exit_ok;
}

int cmd_infer(const CommonOpts& common, const std::string& graph_path,
              const std::string& weights_path, const std::string& mode, int iterations) {
    const HitGraph g = load_graph(graph_path);
    ModelParams params;
    InferConfig cfg;
    if (!weights_path.empty()) {
        std::tie(params, cfg) = load_weights(weights_path);
    } else {
        cfg.d_node = g.node_dim();
        cfg.d_edge = g.edge_dim();
        params = random_params(cfg, common.seed);
    }
    if (iterations > 0) cfg.iterations = iterations;

    std::optional<std::vector<Fx>> fixed;
    std::optional<std::vector<double>> real;
    if (mode == "fixed" || mode == "both") fixed = infer_fixed(g, params, cfg);
    if (mode == "real" || mode == "both") real = infer_real(g, params, cfg);

    std::ostringstream os;
    os << (mode == "both" ? "edge_id,score_fixed,score_real,abs_diff\n"
                          : "edge_id,score\n");
    double max_dev = 0.0;
    for (int e = 0; e < g.num_edges(); ++e) {
        std::optional<Fx> f = fixed ? std::optional<Fx>((*fixed)[e]) : std::nullopt;
        std::optional<double> r = real ? std::optional<double>((*real)[e]) : std::nullopt;
        if (f && r) max_dev = std::max(max_dev, std::abs(f->value() - *r));
        os << score_line(e, f, r) << '\n';
    }
    const auto scores_path = out_path(common, "scores.csv");
    write_text_file(scores_path, os.str());
    std::cout << "wrote " << scores_path.string() << "\n";

    if (mode == "both") {
        nlohmann::json j{{"edges", g.num_edges()},
                         {"iterations", cfg.iterations},
                         {"max_abs_deviation", max_dev}};
        const auto sum_path = out_path(common, "deviation.json");
        write_text_file(sum_path, j.dump(2));
        std::cout << "max |fixed - real| = " << max_dev << "\n";
    }
    return exit_ok;
}

int cmd_allocate(const CommonOpts& common, const std::string& policy, int node_a, int node_b,
                 int edge_aa, int edge_ab, int edge_bb) {
    const GroupWorkloads w = make_workloads(node_a, node_b, edge_aa, edge_ab, edge_bb);
    const Allocation a = policy == "uniform" ? allocate_uniform(w) : allocate_data_aware(w);
    write_text_file(out_path(common, "allocation.csv"), allocation_csv(a, w));
    write_text_file(out_path(common, "allocation.json"), allocation_json(a, w));
    std::cout << "policy " << policy << ": " << a.total_nodeblock() << " Nodeblock + "
              << a.total_edgeblock() << " Edgeblock + " << a.total_aggregate()
              << " Aggregate PEs\n";
    return exit_ok;
}

int run_and_report(const CommonOpts& common, const PeConfig& pe, const Workload& w,
                   const CostModel& cost, const FifoConfig& fifos, bool check, bool append,
                   const std::string& csv_name) {
    const SimReport r = simulate(pe, w, cost, common.clock_mhz, fifos);
    const ResourceEstimate res = estimate_resources(pe, group_workloads(w), ModelDims{});
    const auto csv_path = out_path(common, csv_name);
    std::string csv = append && fs::exists(csv_path) ? read_text_file(csv_path)
                                                     : report_csv_header();
    csv += report_csv_row(r, &res);
    write_text_file(csv_path, csv);
    write_text_file(out_path(common, variant_name(pe.variant) + "_report.json"),
                    report_json(r, &res));
    if (r.deadlock) {
        std::cout << variant_name(pe.variant) << ": deadlock at cycle " << r.deadlock_cycle
                  << " on " << r.deadlock_channel << "\n";
        return exit_error;
    }
    const RequirementCheck rc = check_requirement(r);
    std::cout << variant_name(pe.variant) << ": latency " << trunc3(r.latency_us())
              << " us, interval " << trunc3(r.interval_us()) << " us, " << trunc3(r.mgps())
              << " MGPS (" << (rc.pass ? "meets" : "below") << " 2.22 MGPS, margin "
              << trunc3(rc.margin) << ")\n";
    if (check && !rc.pass) return exit_requirement;
    return exit_ok;
}

int cmd_simulate(const CommonOpts& common, const std::string& variant_str, int pes,
                 const std::string& graph_path, int nodes, int edges, int fifo_depth,
                 bool fifo_auto, bool check) {
    const Variant variant = parse_variant(variant_str);
    const Workload w = make_workload(graph_path, nodes, edges);
    const PeConfig pe = default_pe_config(variant, w, pes);
    const CostModel cost = default_cost_model();
    FifoConfig fifos;
    if (fifo_auto) {
        fifos = min_fifo_depths(pe, w, cost, common.clock_mhz);
        nlohmann::json j;
        for (const auto& [name, depth] : fifos.depths) j[name] = depth;
        write_text_file(out_path(common, "fifo_depths.json"), j.dump(2));
        std::cout << "wrote " << out_path(common, "fifo_depths.json").string() << "\n";
    } else if (fifo_depth > 0) {
        fifos.default_depth = fifo_depth;
    }
    return run_and_report(common, pe, w, cost, fifos, check, false, "report.csv");
}

int cmd_sweep(const CommonOpts& common, const std::string& variant_str, int pe_min, int pe_max,
              const std::string& graph_path, int nodes, int edges) {
    const Variant variant = parse_variant(variant_str);
    const Workload w = make_workload(graph_path, nodes, edges);
    const auto points = sweep_pes(variant, pe_min, pe_max, w, default_cost_model(),
                                  common.clock_mhz);
    std::string csv = "pes," + report_csv_header();
    for (const auto& pt : points) {
        csv += std::to_string(pt.pes) + "," + report_csv_row(pt.report, &pt.resources);
    }
    const auto path = out_path(common, "sweep.csv");
    write_text_file(path, csv);
    std::cout << "wrote " << path.string() << " (" << points.size() << " rows)\n";
    return exit_ok;
}

int cmd_compare(const CommonOpts& common, int nodes, int edges, int mpa_pes, bool calibrated,
                bool check) {
    const Workload w = make_workload("", nodes, edges);
    CostModel cost = default_cost_model();
    if (calibrated) {
        const auto targets = reference_targets();
        const std::vector<CalTarget> fit_rows{targets[0], targets[1]};
        const auto result = calibrate(
            fit_rows, {"ii_edge", "ii_aggregate", "ii_node", "depth_aggregate"}, cost);
        cost = result.model;
        std::cout << "calibrated on mpa/mpa_geo rows, max rel err "
                  << trunc3(result.max_rel_err * 100.0) << "%\n";
    }
    const auto csv_path = out_path(common, "compare.csv");
    if (fs::exists(csv_path)) fs::remove(csv_path);
    int rc_all = exit_ok;
    for (const Variant v : {Variant::mpa, Variant::mpa_geo, Variant::mpa_geo_rsrc}) {
        const PeConfig pe = default_pe_config(v, w, mpa_pes);
        const int rc = run_and_report(common, pe, w, cost, FifoConfig{}, check, true,
                                      "compare.csv");
        rc_all = std::max(rc_all, rc);
    }
    std::cout << "wrote " << csv_path.string() << "\n";
    return rc_all;
}

int cmd_calibrate(const CommonOpts& common, const std::string& free_csv) {
    std::vector<std::string> free_params;
    std::string token;
    std::istringstream is(free_csv);
    while (std::getline(is, token, ',')) {
        if (!token.empty()) free_params.push_back(token);
    }
    const auto targets = reference_targets();
    const std::vector<CalTarget> fit_rows{targets[0], targets[1]};
    const auto result = calibrate(fit_rows, free_params, default_cost_model());

    // Held-out prediction of the third row, under the same unbounded-FIFO
    // conditions the fit used.
    const auto& holdout = targets[2];
    const SimReport pred = simulate(holdout.pe, holdout.workload, result.model,
                                    holdout.clock_mhz, unbounded_fifos());
    const double int_err =
        std::abs(pred.interval_us() - holdout.interval_us) / holdout.interval_us;
    const double lat_err = std::abs(pred.latency_us() - holdout.latency_us) / holdout.latency_us;

    nlohmann::json j;
    for (const auto& name : cost_model_param_names()) {
        j["model"][name] = get_cost_param(result.model, name);
    }
    j["fit_max_rel_err"] = result.max_rel_err;
    for (const auto& r : result.residuals) {
        j["residuals"][r.target] = {{"sim_latency_us", r.sim_latency_us},
                                    {"sim_interval_us", r.sim_interval_us},
                                    {"latency_rel_err", r.latency_rel_err},
                                    {"interval_rel_err", r.interval_rel_err}};
    }
    j["holdout"] = {{"target", holdout.name},
                    {"sim_latency_us", pred.latency_us()},
                    {"sim_interval_us", pred.interval_us()},
                    {"latency_rel_err", lat_err},
                    {"interval_rel_err", int_err}};
    const auto path = out_path(common, "calibration.json");
    write_text_file(path, j.dump(2));
    std::cout << "fit max rel err " << trunc3(result.max_rel_err * 100.0) << "%, holdout "
              << holdout.name << " interval err " << trunc3(int_err * 100.0) << "%\n"
              << "wrote " << path.string() << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized interaction-network inference and dataflow performance model "
                 "for geometry-constrained tracking graphs"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--seed", common.seed, "random seed")->capture_default_str();
    app.add_option("--clock-mhz", common.clock_mhz, "clock frequency in MHz")
        ->capture_default_str();
    app.add_option("--out", common.out_dir, "output directory")->capture_default_str();

    // generate
    int gen_nodes = nominal_nodes, gen_edges = nominal_edges;
    std::string gen_graph_out, gen_weights_out;
    auto* gen = app.add_subcommand("generate", "write a synthetic graph (and weights)");
    gen->add_option("--nodes", gen_nodes, "total node count")->capture_default_str();
    gen->add_option("--edges", gen_edges, "total edge count")->capture_default_str();
    gen->add_option("--graph-out", gen_graph_out, "graph file path (default <out>/graph.csv)");
    gen->add_option("--weights-out", gen_weights_out, "also write random quantized weights");

    // validate / partition
    std::string val_graph, part_graph;
    auto* val = app.add_subcommand("validate", "check a graph file against the layer rules");
    val->add_option("graph", val_graph, "graph file")->required();
    auto* part = app.add_subcommand("partition", "partition a graph into node/edge groups");
    part->add_option("graph", part_graph, "graph file")->required();

    // infer
    std::string inf_graph, inf_weights, inf_mode = "both";
    int inf_iters = 0;
    auto* inf = app.add_subcommand("infer", "run edge classification on a graph");
    inf->add_option("graph", inf_graph, "graph file")->required();
    inf->add_option("--weights", inf_weights, "weights file (default: random from --seed)");
    inf->add_option("--mode", inf_mode, "real|fixed|both")
        ->check(CLI::IsMember({"real", "fixed", "both"}))
        ->capture_default_str();
    inf->add_option("--iterations", inf_iters, "message-passing iterations (override)");

    // allocate
    std::string alloc_policy = "data-aware";
    int node_a = 138, node_b = 62, edge_aa = 277, edge_ab = 77, edge_bb = 87;
    auto* alc = app.add_subcommand("allocate", "map group workloads to PE counts");
    alc->add_option("--policy", alloc_policy, "uniform|data-aware")
        ->check(CLI::IsMember({"uniform", "data-aware"}))
        ->capture_default_str();
    alc->add_option("--node-a", node_a, "workload per type-A node group")->capture_default_str();
    alc->add_option("--node-b", node_b, "workload per type-B node group")->capture_default_str();
    alc->add_option("--edge-aa", edge_aa, "workload per A-A edge group")->capture_default_str();
    alc->add_option("--edge-ab", edge_ab, "workload per A-B edge group")->capture_default_str();
    alc->add_option("--edge-bb", edge_bb, "workload per B-B edge group")->capture_default_str();

    // simulate
    std::string sim_variant = "geo-rsrc", sim_graph;
    int sim_pes = 8, sim_nodes = nominal_nodes, sim_edges = nominal_edges, sim_fifo = 0;
    bool sim_fifo_auto = false, sim_check = false;
    auto* sim = app.add_subcommand("simulate", "cycle-approximate pipeline simulation");
    sim->add_option("--variant", sim_variant, "mpa|geo|geo-rsrc")->capture_default_str();
    sim->add_option("--pes", sim_pes, "system PEs per stage (mpa only)")->capture_default_str();
    sim->add_option("--graph", sim_graph, "derive the workload from a graph file");
    sim->add_option("--nodes", sim_nodes, "workload node count")->capture_default_str();
    sim->add_option("--edges", sim_edges, "workload edge count")->capture_default_str();
    sim->add_option("--fifo-depth", sim_fifo, "uniform FIFO depth (default: one graph)");
    sim->add_flag("--fifo-auto", sim_fifo_auto, "search minimal deadlock-free FIFO depths");
    sim->add_flag("--check", sim_check, "exit 4 if throughput is not above 2.22 MGPS");

    // sweep
    std::string sweep_variant = "mpa", sweep_graph;
    int pe_min = 1, pe_max = 8, sweep_nodes = nominal_nodes, sweep_edges = nominal_edges;
    auto* swp = app.add_subcommand("sweep", "PE-count scaling sweep");
    swp->add_option("--variant", sweep_variant, "mpa|geo|geo-rsrc")->capture_default_str();
    swp->add_option("--pe-min", pe_min, "first PE count")->capture_default_str();
    swp->add_option("--pe-max", pe_max, "last PE count")->capture_default_str();
    swp->add_option("--graph", sweep_graph, "derive the workload from a graph file");
    swp->add_option("--nodes", sweep_nodes, "workload node count")->capture_default_str();
    swp->add_option("--edges", sweep_edges, "workload edge count")->capture_default_str();

    // compare-variants
    int cmp_nodes = nominal_nodes, cmp_edges = nominal_edges, cmp_mpa_pes = 8;
    bool cmp_cal = false, cmp_check = false;
    auto* cmp = app.add_subcommand("compare-variants",
                                   "simulate mpa, geo and geo-rsrc on one workload");
    cmp->add_option("--nodes", cmp_nodes, "workload node count")->capture_default_str();
    cmp->add_option("--edges", cmp_edges, "workload edge count")->capture_default_str();
    cmp->add_option("--mpa-pes", cmp_mpa_pes, "system PEs for the mpa row")
        ->capture_default_str();
    cmp->add_flag("--calibrated", cmp_cal, "fit stage constants to the reference rows first");
    cmp->add_flag("--check", cmp_check, "exit 4 if any variant misses 2.22 MGPS");

    // calibrate
    std::string cal_free = "ii_edge,ii_aggregate,ii_node,depth_aggregate";
    auto* cal = app.add_subcommand("calibrate",
                                   "fit stage constants to the reference rows and report "
                                   "the held-out prediction error");
    cal->add_option("--free", cal_free, "comma-separated free parameters (max 4 by default)")
        ->capture_default_str();

    for (CLI::App* s : {gen, val, part, inf, alc, sim, swp, cmp, cal}) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_parse;
    }

    try {
        if (gen->parsed()) {
            return cmd_generate(common, gen_nodes, gen_edges, gen_graph_out, gen_weights_out);
        }
        if (val->parsed()) return cmd_validate(val_graph);
        if (part->parsed()) return cmd_partition(common, part_graph);
        if (inf->parsed()) return cmd_infer(common, inf_graph, inf_weights, inf_mode, inf_iters);
        if (alc->parsed()) {
            return cmd_allocate(common, alloc_policy, node_a, node_b, edge_aa, edge_ab, edge_bb);
        }
        if (sim->parsed()) {
            return cmd_simulate(common, sim_variant, sim_pes, sim_graph, sim_nodes, sim_edges,
                                sim_fifo, sim_fifo_auto, sim_check);
        }
        if (swp->parsed()) {
            return cmd_sweep(common, sweep_variant, pe_min, pe_max, sweep_graph, sweep_nodes,
                             sweep_edges);
        }
        if (cmp->parsed()) {
            return cmd_compare(common, cmp_nodes, cmp_edges, cmp_mpa_pes, cmp_cal, cmp_check);
        }
        if (cal->parsed()) return cmd_calibrate(common, cal_free);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_parse;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
