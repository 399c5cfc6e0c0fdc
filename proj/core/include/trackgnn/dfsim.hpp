#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trackgnn/alloc.hpp"
#include "trackgnn/geom.hpp"

namespace trackgnn {

// Per-stage-kind timing constants. II is cycles per element per PE; depth is
// the element latency through the stage pipeline. All are calibratable; the
// defaults assume II = 1 and four cycles per MLP layer.
struct CostModel {
    int ii_edge = 1;
    int ii_aggregate = 1;
    int ii_node = 1;
    int ii_classifier = 1;
    int depth_edge = 12;
    int depth_aggregate = 4;
    int depth_node = 12;
    int depth_classifier = 12;
};

CostModel default_cost_model(int mlp_layers = 3);

// Element counts per graph. Geometry variants read the per-group arrays,
// MPA reads the totals. max_indegree sizes the aggregate adder-tree
// epilogue; 0 selects the ceil(2*edges/nodes) heuristic.
struct Workload {
    int n_nodes = 0;
    int n_edges = 0;
    std::array<int, num_layers> nodes_per_group{};
    std::array<int, num_edge_groups> edges_per_group{};
    int max_indegree = 0;
};

Workload workload_from_totals(int n_nodes, int n_edges);
Workload workload_from_partition(const Partition& p);
Workload nominal_workload();  // 739 nodes / 1252 edges, type-ratio split

inline constexpr int nominal_nodes = 739;
inline constexpr int nominal_edges = 1252;

// Per-channel FIFO capacities, keyed by channel name. Channels without an
// entry fall back to default_depth; default_depth 0 means "ample" (one
// graph's worth of tokens).
struct FifoConfig {
    std::map<std::string, int> depths;
    int default_depth = 0;
};

FifoConfig unbounded_fifos();

struct StageStats {
    std::string name;
    std::int64_t busy = 0;
    std::int64_t stall = 0;
};

struct ChannelStats {
    std::string name;
    int capacity = 0;
    std::int64_t peak = 0;
};

struct SimReport {
    Variant variant = Variant::mpa;
    std::string pe_desc;
    int total_pes = 0;
    double clock_mhz = 200.0;
    std::int64_t latency_cycles = 0;
    std::int64_t interval_cycles = 0;
    std::vector<std::int64_t> graph_done_cycle;
    bool deadlock = false;
    std::string deadlock_channel;
    std::string deadlock_detail;
    std::int64_t deadlock_cycle = -1;
    std::vector<StageStats> stages;
    std::vector<ChannelStats> channels;

    double latency_us() const { return static_cast<double>(latency_cycles) / clock_mhz; }
    double interval_us() const { return static_cast<double>(interval_cycles) / clock_mhz; }
    double mgps() const { return clock_mhz / static_cast<double>(interval_cycles); }
};

// Decimal rendering used in reports; truncates toward zero at three
// decimals, the convention of the published throughput figures.
std::string trunc3(double value);

inline constexpr double throughput_requirement_mgps = 2.22;

struct RequirementCheck {
    bool pass = false;
    double margin = 0.0;  // mgps - threshold
    double threshold = throughput_requirement_mgps;
};

// Pass iff throughput is strictly above 2.22 MGPS.
RequirementCheck check_requirement(const SimReport& r);

// --- Generic dataflow engine -------------------------------------------------
//
// A pipeline is a fixed DAG of units connected by bounded single-direction
// FIFO channels. Units run a per-graph sequence of phases:
//   feed:     push per-channel quotas (source streams, barrier flushes)
//   fill:     drain per-channel quotas into a local array (no output)
//   map:      consume one stream, emit 1:1 to every out channel through a
//             PE pipeline (II cycles per element per PE, depth latency)
//   lockstep: consume one token from every in channel per row, emit one per
//             row (merging streams, e.g. partial aggregates into Nodeblock)
//   wait:     fixed gap (pipeline drain, adder-tree epilogue)
// Output space is reserved when an element starts, so a stage only begins
// work it can retire; a full downstream FIFO therefore backpressures the
// producer, and an unfillable quota is a deadlock.

enum class PhaseKind { feed, fill, map, lockstep, wait };

struct PhaseSpec {
    PhaseKind kind = PhaseKind::map;
    std::vector<std::pair<int, std::int64_t>> ins;   // (channel, quota per graph)
    std::vector<std::pair<int, std::int64_t>> outs;  // (channel, quota per graph)
    int wait_cycles = 0;
};

struct UnitSpec {
    std::string name;
    int pes = 1;
    int ii = 1;
    int depth = 0;
    std::vector<PhaseSpec> phases;
    bool is_sink = false;
};

struct ChannelSpec {
    std::string name;
    int width = 1;            // max tokens per cycle through either port
    std::int64_t token_bits = 14;
    bool searchable = true;   // participates in min_fifo_depths
};

struct PipelineSpec {
    std::vector<ChannelSpec> channels;
    std::vector<UnitSpec> units;  // stepped in order each cycle; list sources first
};

struct SimOptions {
    int graphs = 4;
    std::int64_t max_cycles = 1'000'000'000;
};

SimReport run_pipeline(const PipelineSpec& spec, const FifoConfig& fifos, double clock_mhz,
                       const SimOptions& opts = {});

// --- Model-level entry points ------------------------------------------------

// Builds the staged pipeline for a variant: Edgeblock -> Aggregate ->
// Nodeblock -> classifier with a bypass FIFO carrying updated edge features
// past Aggregate/Nodeblock. Geometry variants instantiate one lane per edge
// group and one Nodeblock per node group.
PipelineSpec build_pipeline(const PeConfig& pe, const Workload& w, const CostModel& cost);

SimReport simulate(const PeConfig& pe, const Workload& w, const CostModel& cost,
                   double clock_mhz, const FifoConfig& fifos, const SimOptions& opts = {});

struct SweepPoint {
    int pes = 1;
    SimReport report;
    ResourceEstimate resources;
};

// One simulation per PE count (MPA: system PEs per stage; geometry variants:
// PEs per group), with matching resource estimates. Uses unbounded FIFOs so
// the scaling trend is not confounded by buffering.
std::vector<SweepPoint> sweep_pes(Variant variant, int pe_min, int pe_max, const Workload& w,
                                  const CostModel& cost, double clock_mhz,
                                  const ModelDims& dims = {});

// Smallest per-channel depths that preserve the unbounded-FIFO interval,
// found by per-channel binary search (earlier channels pinned at their found
// minimum while later ones stay unbounded, which makes the result valid and
// per-coordinate minimal under the FIFO monotonicity property).
FifoConfig min_fifo_depths(const PipelineSpec& spec, double clock_mhz,
                           const SimOptions& opts = {});
FifoConfig min_fifo_depths(const PeConfig& pe, const Workload& w, const CostModel& cost,
                           double clock_mhz, const SimOptions& opts = {});

// --- Calibration -------------------------------------------------------------

struct CalTarget {
    std::string name;
    PeConfig pe;
    Workload workload;
    double clock_mhz = 200.0;
    double latency_us = 0.0;
    double interval_us = 0.0;
};

struct CalResidual {
    std::string target;
    double sim_latency_us = 0.0;
    double sim_interval_us = 0.0;
    double latency_rel_err = 0.0;
    double interval_rel_err = 0.0;
};

struct CalibrationResult {
    CostModel model;
    std::vector<CalResidual> residuals;
    double max_rel_err = 0.0;
};

struct CalBounds {
    int ii_min = 1, ii_max = 8;
    int depth_min = 1, depth_max = 64;
};

// Free parameters are CostModel field names ("ii_edge", "depth_node", ...).
// Exhaustive grid for up to two free parameters, deterministic coordinate
// descent beyond that; minimizes the max relative error over all targets'
// latency and interval. Always returns the best model found with its
// residuals, even when no parameter setting fits the targets.
CalibrationResult calibrate(const std::vector<CalTarget>& targets,
                            const std::vector<std::string>& free_params, const CostModel& base,
                            const CalBounds& bounds = {});

std::vector<std::string> cost_model_param_names();
int get_cost_param(const CostModel& m, const std::string& name);
void set_cost_param(CostModel& m, const std::string& name, int value);

// Standard provisioning per variant: N system PEs for MPA, one PE per group
// for mpa_geo, workload-proportional counts for mpa_geo_rsrc.
PeConfig default_pe_config(Variant v, const Workload& w, int mpa_pes = 8);

// Measured figures of the reference FPGA implementation at 200 MHz on the
// nominal workload (latency_us, interval_us): mpa 3.165/0.48,
// mpa_geo 2.69/0.425, mpa_geo_rsrc 2.07/0.31. The MPA row assumes 8 system
// PEs, the top of the published scaling sweep.
std::vector<CalTarget> reference_targets();

}  // namespace trackgnn
