#include "trackgnn/dfsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

namespace trackgnn {

CostModel default_cost_model(int mlp_layers) {
    CostModel m;
    m.depth_edge = 4 * mlp_layers;
    m.depth_node = 4 * mlp_layers;
    m.depth_classifier = 4 * mlp_layers;
    m.depth_aggregate = 4;
    return m;
}

Workload workload_from_totals(int n_nodes, int n_edges) {
    if (n_nodes < 0 || n_edges < 0) throw std::invalid_argument("workload: negative counts");
    Workload w;
    w.n_nodes = n_nodes;
    w.n_edges = n_edges;
    const GroupWorkloads split = proportional_workloads(n_nodes, n_edges);
    w.nodes_per_group = split.node_sizes;
    w.edges_per_group = split.edge_sizes;
    return w;
}

Workload workload_from_partition(const Partition& p) {
    Workload w;
    w.n_nodes = p.n_nodes;
    w.n_edges = p.n_edges;
    for (int l = 0; l < num_layers; ++l) {
        w.nodes_per_group[l] = static_cast<int>(p.node_groups[l].size());
    }
    std::vector<int> indeg(static_cast<std::size_t>(std::max(p.n_nodes, 1)), 0);
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const EdgeGroup& eg = p.edge_groups[gi];
        w.edges_per_group[gi] = eg.size();
        const auto& outer = p.node_groups[static_cast<int>(eg.pair.outer)];
        for (int i = 0; i < eg.size(); ++i) indeg[outer[eg.local_receiver[i]]] += 1;
    }
    w.max_indegree = indeg.empty() ? 0 : *std::max_element(indeg.begin(), indeg.end());
    return w;
}

Workload nominal_workload() { return workload_from_totals(nominal_nodes, nominal_edges); }

FifoConfig unbounded_fifos() {
    FifoConfig f;
    f.default_depth = 1 << 28;
    return f;
}

std::string trunc3(double value) {
    const double t = std::floor(value * 1000.0) / 1000.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", t);
    return buf;
}

RequirementCheck check_requirement(const SimReport& r) {
    RequirementCheck c;
    c.margin = r.mgps() - throughput_requirement_mgps;
    c.pass = r.mgps() > throughput_requirement_mgps;
    return c;
}

// --- Engine ------------------------------------------------------------------

namespace {

struct Channel {
    const ChannelSpec* spec = nullptr;
    std::int64_t capacity = 0;
    std::int64_t queued = 0;
    std::int64_t peak = 0;
    std::int64_t pops_this_cycle = 0;
    std::int64_t pushes_this_cycle = 0;
    std::deque<std::pair<int, std::int64_t>> graphs;  // (graph id, token count)

    std::int64_t free_space() const { return capacity - queued; }

    void push(int graph, std::int64_t n) {
        if (!graphs.empty() && graphs.back().first == graph) {
            graphs.back().second += n;
        } else {
            graphs.push_back({graph, n});
        }
        queued += n;
        peak = std::max(peak, queued);
    }

    // Tokens of `graph` available at the queue front.
    std::int64_t front_tokens(int graph) const {
        if (graphs.empty()) return 0;
        if (graphs.front().first != graph) return 0;
        return graphs.front().second;
    }

    void pop(int graph, std::int64_t n) {
        auto& front = graphs.front();
        front.second -= n;
        queued -= n;
        if (front.second == 0) graphs.pop_front();
        (void)graph;
    }
};

struct PhaseState {
    std::vector<std::int64_t> in_done;
    std::vector<std::int64_t> out_done;
    std::int64_t started = 0;
    std::int64_t wait_until = -1;
    bool entered = false;
};

struct PendItem {
    std::int64_t cycle;  // earliest landing cycle
    int graph;
    std::int64_t count;
};

struct Unit {
    const UnitSpec* spec = nullptr;
    int graph = 0;
    std::int64_t graph_enter_cycle = -1;
    int phase_idx = 0;
    std::vector<PhaseState> phase_states;
    std::vector<std::int64_t> pe_free;
    std::map<int, std::deque<PendItem>> pending;  // per out channel, FIFO
    std::int64_t pending_total = 0;
    std::int64_t busy = 0;
    std::int64_t stall = 0;
    int blocked_channel = -1;  // out channel that refused tokens this cycle
    bool frozen = false;       // a due delivery could not land: pipeline stalls
    bool done = false;
};

class Sim {
public:
    Sim(const PipelineSpec& spec, const FifoConfig& fifos, double clock_mhz,
        const SimOptions& opts)
        : spec_(spec), opts_(opts) {
        report_.clock_mhz = clock_mhz;
        channels_.resize(spec.channels.size());
        for (std::size_t i = 0; i < spec.channels.size(); ++i) {
            channels_[i].spec = &spec.channels[i];
            channels_[i].capacity = resolve_depth(spec.channels[i], fifos);
        }
        units_.resize(spec.units.size());
        for (std::size_t i = 0; i < spec.units.size(); ++i) {
            units_[i].spec = &spec.units[i];
            units_[i].pe_free.assign(static_cast<std::size_t>(std::max(1, spec.units[i].pes)), 0);
            units_[i].phase_states.resize(spec.units[i].phases.size());
            if (spec.units[i].is_sink) sink_ = static_cast<int>(i);
        }
        if (sink_ < 0) throw std::invalid_argument("pipeline has no sink unit");
        graph_done_.assign(static_cast<std::size_t>(opts.graphs), -1);
    }

    SimReport run() {
        std::int64_t t = 0;
        while (graphs_done_ < opts_.graphs) {
            progress_ = false;
            for (auto& ch : channels_) {
                ch.pops_this_cycle = 0;
                ch.pushes_this_cycle = 0;
            }
            for (auto& u : units_) step_unit(u, t);
            if (!progress_) {
                report_.deadlock = true;
                report_.deadlock_cycle = t;
                report_.deadlock_channel = diagnose_blocked_channel();
                report_.deadlock_detail = deadlock_detail();
                break;
            }
            if (++t > opts_.max_cycles) {
                throw std::runtime_error("simulation exceeded max_cycles");
            }
        }
        finalize(t);
        return report_;
    }

private:
    std::int64_t resolve_depth(const ChannelSpec& ch, const FifoConfig& fifos) const {
        auto it = fifos.depths.find(ch.name);
        if (it != fifos.depths.end()) return std::max(1, it->second);
        if (fifos.default_depth > 0) return fifos.default_depth;
        // Ample default: one graph's worth of tokens.
        return std::max<std::int64_t>(1, quota_through(ch));
    }

    std::int64_t quota_through(const ChannelSpec& ch) const {
        const int id = static_cast<int>(&ch - spec_.channels.data());
        std::int64_t q = 1;
        for (const auto& u : spec_.units) {
            for (const auto& ph : u.phases) {
                for (const auto& [c, quota] : ph.outs) {
                    if (c == id) q = std::max(q, quota);
                }
            }
        }
        return q;
    }

    bool unit_work_remaining(const Unit& u) const {
        return !u.done && u.graph < opts_.graphs;
    }

    void step_unit(Unit& u, std::int64_t t) {
        u.blocked_channel = -1;
        land_deliveries(u, t);
        if (u.frozen) {
            // Retirement blocked downstream: the whole unit pipeline stalls.
            u.stall += 1;
            return;
        }
        if (!unit_work_remaining(u)) return;

        bool acted = false;
        bool blocked = false;

        while (unit_work_remaining(u) && !blocked) {
            if (u.graph_enter_cycle < 0) u.graph_enter_cycle = t;
            if (u.phase_idx >= static_cast<int>(u.spec->phases.size())) {
                // One cycle minimum per graph keeps degenerate (empty)
                // workloads well ordered.
                if (t == u.graph_enter_cycle) {
                    progress_ = true;
                    break;
                }
                if (u.spec->is_sink) record_graph_done(u.graph, t);
                advance_graph(u, t);
                continue;
            }
            const PhaseSpec& ph = u.spec->phases[u.phase_idx];
            PhaseState& st = u.phase_states[u.phase_idx];
            if (!st.entered) {
                st.entered = true;
                st.in_done.assign(ph.ins.size(), 0);
                st.out_done.assign(ph.outs.size(), 0);
                st.started = 0;
                st.wait_until = ph.kind == PhaseKind::wait ? t + ph.wait_cycles : -1;
            }
            const bool did = run_phase(u, ph, st, t);
            acted = acted || did;
            if (phase_complete(ph, st, t)) {
                u.phase_idx += 1;
                continue;
            }
            blocked = true;
        }

        if (acted) {
            u.busy += 1;
            progress_ = true;
        } else if (blocked) {
            u.stall += 1;
        }
    }

    void advance_graph(Unit& u, std::int64_t t) {
        u.graph += 1;
        u.phase_idx = 0;
        u.graph_enter_cycle = t;
        for (auto& st : u.phase_states) st = PhaseState{};
        if (u.graph >= opts_.graphs) u.done = true;
        progress_ = true;
    }

    void record_graph_done(int graph, std::int64_t t) {
        if (graph < opts_.graphs && graph_done_[graph] < 0) {
            graph_done_[graph] = t;
            graphs_done_ += 1;
        }
    }

    bool phase_complete(const PhaseSpec& ph, const PhaseState& st, std::int64_t t) const {
        switch (ph.kind) {
            case PhaseKind::wait:
                return t >= st.wait_until;
            case PhaseKind::feed: {
                for (std::size_t i = 0; i < ph.outs.size(); ++i) {
                    if (st.out_done[i] < ph.outs[i].second) return false;
                }
                return true;
            }
            case PhaseKind::fill: {
                for (std::size_t i = 0; i < ph.ins.size(); ++i) {
                    if (st.in_done[i] < ph.ins[i].second) return false;
                }
                return true;
            }
            case PhaseKind::map:
                return ph.ins.empty() || st.started >= ph.ins[0].second;
            case PhaseKind::lockstep:
                return ph.ins.empty() || st.started >= ph.ins[0].second;
        }
        return true;
    }

    bool run_phase(Unit& u, const PhaseSpec& ph, PhaseState& st, std::int64_t t) {
        switch (ph.kind) {
            case PhaseKind::wait:
                if (t < st.wait_until) progress_ = true;  // the countdown is progress
                return false;
            case PhaseKind::feed:
                return run_feed(u, ph, st);
            case PhaseKind::fill:
                return run_fill(u, ph, st);
            case PhaseKind::map:
                return run_map(u, ph, st, t);
            case PhaseKind::lockstep:
                return run_lockstep(u, ph, st, t);
        }
        return false;
    }

    bool run_feed(Unit& u, const PhaseSpec& ph, PhaseState& st) {
        bool acted = false;
        for (std::size_t i = 0; i < ph.outs.size(); ++i) {
            const auto [cid, quota] = ph.outs[i];
            Channel& ch = channels_[cid];
            std::int64_t n = quota - st.out_done[i];
            n = std::min(n, ch.spec->width - ch.pushes_this_cycle);
            n = std::min(n, ch.free_space());
            if (n <= 0) {
                if (quota - st.out_done[i] > 0 && ch.free_space() <= 0) {
                    u.blocked_channel = cid;
                }
                continue;
            }
            ch.push(u.graph, n);
            ch.pushes_this_cycle += n;
            st.out_done[i] += n;
            acted = true;
        }
        if (acted) progress_ = true;
        return acted;
    }

    bool run_fill(Unit& u, const PhaseSpec& ph, PhaseState& st) {
        bool acted = false;
        for (std::size_t i = 0; i < ph.ins.size(); ++i) {
            const auto [cid, quota] = ph.ins[i];
            Channel& ch = channels_[cid];
            std::int64_t n = quota - st.in_done[i];
            n = std::min(n, ch.spec->width - ch.pops_this_cycle);
            n = std::min(n, ch.front_tokens(u.graph));
            if (n <= 0) continue;
            ch.pop(u.graph, n);
            ch.pops_this_cycle += n;
            st.in_done[i] += n;
            acted = true;
        }
        if (acted) progress_ = true;
        return acted;
    }

    // Finds a PE free at or before t; returns its index or -1.
    int free_pe(Unit& u, std::int64_t t) {
        for (std::size_t i = 0; i < u.pe_free.size(); ++i) {
            if (u.pe_free[i] <= t) return static_cast<int>(i);
        }
        return -1;
    }

    bool run_map(Unit& u, const PhaseSpec& ph, PhaseState& st, std::int64_t t) {
        if (ph.ins.empty()) return false;
        const auto [in_id, quota] = ph.ins[0];
        Channel& in = channels_[in_id];
        bool acted = false;
        while (st.started < quota) {
            if (in.front_tokens(u.graph) <= 0) break;
            if (in.pops_this_cycle >= in.spec->width) break;
            const int pe = free_pe(u, t);
            if (pe < 0) {
                progress_ = true;  // PEs cool down by themselves
                break;
            }
            in.pop(u.graph, 1);
            in.pops_this_cycle += 1;
            u.pe_free[pe] = t + u.spec->ii;
            schedule(u, ph, t);
            st.started += 1;
            acted = true;
        }
        if (acted) progress_ = true;
        return acted;
    }

    bool run_lockstep(Unit& u, const PhaseSpec& ph, PhaseState& st, std::int64_t t) {
        if (ph.ins.empty()) return false;
        const std::int64_t rows = ph.ins[0].second;
        bool acted = false;
        while (st.started < rows) {
            bool ready = true;
            for (const auto& [cid, q] : ph.ins) {
                Channel& ch = channels_[cid];
                if (ch.front_tokens(u.graph) <= 0 || ch.pops_this_cycle >= ch.spec->width) {
                    ready = false;
                    break;
                }
            }
            if (!ready) break;
            const int pe = free_pe(u, t);
            if (pe < 0) {
                progress_ = true;
                break;
            }
            for (const auto& [cid, q] : ph.ins) {
                channels_[cid].pop(u.graph, 1);
                channels_[cid].pops_this_cycle += 1;
            }
            u.pe_free[pe] = t + u.spec->ii;
            schedule(u, ph, t);
            st.started += 1;
            acted = true;
        }
        if (acted) progress_ = true;
        return acted;
    }

    // Queue one token per out channel, landing after the element latency.
    void schedule(Unit& u, const PhaseSpec& ph, std::int64_t t) {
        const std::int64_t land = t + u.spec->ii + u.spec->depth;
        for (const auto& [out_id, oq] : ph.outs) {
            auto& q = u.pending[out_id];
            if (!q.empty() && q.back().cycle == land && q.back().graph == u.graph) {
                q.back().count += 1;
            } else {
                q.push_back({land, u.graph, 1});
            }
            u.pending_total += 1;
        }
    }

    // Retire due deliveries into their channels, in FIFO order per channel.
    // A full (or port-saturated) channel leaves the remainder pending and
    // freezes the unit for this cycle.
    void land_deliveries(Unit& u, std::int64_t t) {
        u.frozen = false;
        bool future = false;
        for (auto& [cid, q] : u.pending) {
            Channel& ch = channels_[cid];
            while (!q.empty() && q.front().cycle <= t) {
                PendItem& item = q.front();
                const std::int64_t n = std::min(
                    {item.count, ch.free_space(), ch.spec->width - ch.pushes_this_cycle});
                if (n > 0) {
                    ch.push(item.graph, n);
                    ch.pushes_this_cycle += n;
                    item.count -= n;
                    u.pending_total -= n;
                    progress_ = true;
                }
                if (item.count == 0) {
                    q.pop_front();
                    continue;
                }
                u.frozen = true;
                if (ch.free_space() <= 0) u.blocked_channel = cid;
                break;
            }
            if (!q.empty() && q.back().cycle > t) future = true;
        }
        if (future) progress_ = true;  // in-transit elements keep the clock alive
    }

    // Prefer the most downstream producer refused by a full channel; backed-up
    // sources are symptoms, not causes.
    std::string diagnose_blocked_channel() const {
        for (auto it = units_.rbegin(); it != units_.rend(); ++it) {
            if (it->blocked_channel >= 0) return channels_[it->blocked_channel].spec->name;
        }
        for (const auto& ch : channels_) {
            if (ch.queued >= ch.capacity && ch.capacity > 0) return ch.spec->name;
        }
        return "(unknown)";
    }

    std::string deadlock_detail() const {
        std::string s;
        for (const auto& u : units_) {
            if (u.done) continue;
            s += u.spec->name + ": graph " + std::to_string(u.graph) + " phase " +
                 std::to_string(u.phase_idx);
            if (u.blocked_channel >= 0) {
                s += " blocked on " + channels_[u.blocked_channel].spec->name;
            }
            s += "\n";
        }
        for (const auto& ch : channels_) {
            if (ch.queued == 0) continue;
            s += ch.spec->name + ": queued " + std::to_string(ch.queued) + "/" +
                 std::to_string(ch.capacity);
            if (!ch.graphs.empty()) s += " front graph " + std::to_string(ch.graphs.front().first);
            s += "\n";
        }
        return s;
    }

    void finalize(std::int64_t) {
        report_.graph_done_cycle = graph_done_;
        if (!report_.deadlock) {
            report_.latency_cycles = std::max<std::int64_t>(1, graph_done_[0]);
            if (opts_.graphs >= 2) {
                report_.interval_cycles =
                    std::max<std::int64_t>(1, graph_done_[opts_.graphs - 1] -
                                                  graph_done_[opts_.graphs - 2]);
            } else {
                report_.interval_cycles = report_.latency_cycles;
            }
            report_.latency_cycles = std::max(report_.latency_cycles, report_.interval_cycles);
        }
        for (const auto& u : units_) {
            report_.stages.push_back({u.spec->name, u.busy, u.stall});
        }
        for (const auto& ch : channels_) {
            report_.channels.push_back(
                {ch.spec->name, static_cast<int>(std::min<std::int64_t>(ch.capacity, 1 << 30)),
                 ch.peak});
        }
    }

    const PipelineSpec& spec_;
    SimOptions opts_;
    std::vector<Channel> channels_;
    std::vector<Unit> units_;
    std::vector<std::int64_t> graph_done_;
    int graphs_done_ = 0;
    int sink_ = -1;
    bool progress_ = false;
    SimReport report_;
};

}  // namespace

SimReport run_pipeline(const PipelineSpec& spec, const FifoConfig& fifos, double clock_mhz,
                       const SimOptions& opts) {
    if (opts.graphs < 1) throw std::invalid_argument("run_pipeline: graphs must be >= 1");
    Sim sim(spec, fifos, clock_mhz, opts);
    return sim.run();
}

// --- Topology builder ---------------------------------------------------------

namespace {

int ceil_log2(std::int64_t n) {
    int bits = 0;
    std::int64_t v = 1;
    while (v < n) {
        v <<= 1;
        ++bits;
    }
    return bits;
}

int epilogue_cycles(const Workload& w) {
    int indeg = w.max_indegree;
    if (indeg <= 0) {
        indeg = w.n_nodes > 0 ? static_cast<int>((2LL * w.n_edges + w.n_nodes - 1) / w.n_nodes)
                              : 1;
        indeg = std::max(indeg, 1);
    }
    return ceil_log2(indeg);
}

struct Builder {
    PipelineSpec spec;
    UnitSpec source{"source"};
    UnitSpec sink{"sink"};
    PhaseSpec source_feed{PhaseKind::feed};
    PhaseSpec sink_fill{PhaseKind::fill};

    int add_channel(const std::string& name, int width, std::int64_t token_bits,
                    bool searchable = true) {
        spec.channels.push_back({name, std::max(1, width), token_bits, searchable});
        return static_cast<int>(spec.channels.size()) - 1;
    }

    int src_channel(const std::string& name, int width, std::int64_t token_bits,
                    std::int64_t quota) {
        const int id = add_channel(name, width, token_bits);
        source_feed.outs.push_back({id, quota});
        return id;
    }

    int sink_channel(const std::string& name, int width, std::int64_t token_bits,
                     std::int64_t quota) {
        const int id = add_channel(name, width, token_bits, false);
        sink_fill.ins.push_back({id, quota});
        return id;
    }

    void finish(std::vector<UnitSpec> units) {
        source.phases.push_back(source_feed);
        sink.phases.push_back(sink_fill);
        sink.is_sink = true;
        // Unbounded sink ports: the environment always accepts results.
        spec.units.push_back(source);
        for (auto& u : units) spec.units.push_back(std::move(u));
        spec.units.push_back(sink);
    }
};

}  // namespace

PipelineSpec build_pipeline(const PeConfig& pe, const Workload& w, const CostModel& cost) {
    const int ep = epilogue_cycles(w);
    const std::int64_t node_bits = 3LL * Fx::word_bits;
    const std::int64_t edge_bits = 4LL * Fx::word_bits;
    Builder b;

    if (pe.variant == Variant::mpa) {
        const int p = std::max(1, pe.mpa_pes);
        const std::int64_t n = w.n_nodes;
        const std::int64_t m = w.n_edges;

        const int c_fill = b.src_channel("source->edgeblock:nodes", p, node_bits, n);
        const int c_edges = b.src_channel("source->edgeblock:edges", p, edge_bits, m);
        const int c_nb_src = b.src_channel("source->nodeblock:nodes", p, node_bits, n);
        const int c_ea = b.add_channel("edgeblock->aggregate:edges", p, edge_bits);
        const int c_ec = b.add_channel("edgeblock->classifier:edges", p, edge_bits);
        const int c_an = b.add_channel("aggregate->nodeblock:partials", 1, edge_bits);
        const int c_nc = b.add_channel("nodeblock->classifier:nodes", 1, node_bits);
        const int c_out = b.sink_channel("classifier->sink:scores", p, Fx::word_bits, m);

        UnitSpec eb{"edgeblock", p, cost.ii_edge, cost.depth_edge};
        eb.phases.push_back({PhaseKind::fill, {{c_fill, n}}, {}, 0});
        eb.phases.push_back({PhaseKind::map, {{c_edges, m}}, {{c_ea, m}, {c_ec, m}}, 0});

        UnitSpec agg{"aggregate", p, cost.ii_aggregate, cost.depth_aggregate};
        agg.phases.push_back({PhaseKind::map, {{c_ea, m}}, {}, 0});
        agg.phases.push_back({PhaseKind::wait, {}, {}, cost.depth_aggregate + ep});
        agg.phases.push_back({PhaseKind::feed, {}, {{c_an, n}}, 0});

        UnitSpec nb{"nodeblock", p, cost.ii_node, cost.depth_node + ceil_log2(2)};
        nb.phases.push_back({PhaseKind::lockstep, {{c_nb_src, n}, {c_an, n}}, {{c_nc, n}}, 0});

        UnitSpec cls{"classifier", p, cost.ii_classifier, cost.depth_classifier};
        cls.phases.push_back({PhaseKind::fill, {{c_nc, n}}, {}, 0});
        cls.phases.push_back({PhaseKind::map, {{c_ec, m}}, {{c_out, m}}, 0});

        b.finish({eb, agg, nb, cls});
        return b.spec;
    }

    // Geometry variants: one lane per edge group, one Nodeblock per node
    // group, merged through single-rate streams.
    const auto& pairs = legal_pairs();
    std::array<std::int64_t, num_layers> n_l{};
    for (int l = 0; l < num_layers; ++l) n_l[l] = w.nodes_per_group[l];

    std::array<int, num_edge_groups> c_edges{}, c_fill_in{}, c_fill_out{}, c_ea{}, c_ec{},
        c_an{}, c_nc_in{}, c_nc_out{}, c_out{};
    std::array<int, num_layers> c_nb_src{};

    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pr = pairs[gi];
        const std::string tag = pair_name(pr);
        const int p_eb = std::max(1, pe.groups.edgeblock_pes[gi]);
        const std::int64_t m = w.edges_per_group[gi];
        const std::int64_t ni = n_l[static_cast<int>(pr.inner)];
        const std::int64_t no = n_l[static_cast<int>(pr.outer)];
        c_fill_in[gi] =
            b.src_channel("source->edgeblock[" + tag + "]:inner_nodes", p_eb, node_bits, ni);
        c_fill_out[gi] =
            b.src_channel("source->edgeblock[" + tag + "]:outer_nodes", p_eb, node_bits, no);
        c_edges[gi] = b.src_channel("source->edgeblock[" + tag + "]:edges", p_eb, edge_bits, m);
        c_ea[gi] = b.add_channel("edgeblock[" + tag + "]->aggregate[" + tag + "]:edges", p_eb,
                                 edge_bits);
        c_ec[gi] = b.add_channel("edgeblock[" + tag + "]->classifier[" + tag + "]:edges", p_eb,
                                 edge_bits);
        c_an[gi] = b.add_channel("aggregate[" + tag + "]->nodeblock["
                                     + std::string(layer_name(pr.outer)) + "]:partials",
                                 1, edge_bits);
        c_nc_in[gi] = b.add_channel("nodeblock[" + std::string(layer_name(pr.inner))
                                        + "]->classifier[" + tag + "]:nodes",
                                    1, node_bits);
        c_nc_out[gi] = b.add_channel("nodeblock[" + std::string(layer_name(pr.outer))
                                         + "]->classifier[" + tag + "]:nodes",
                                     1, node_bits);
        c_out[gi] = b.sink_channel("classifier[" + tag + "]->sink:scores", p_eb, Fx::word_bits, m);
    }
    for (int l = 0; l < num_layers; ++l) {
        const int p_nb = std::max(1, pe.groups.nodeblock_pes[l]);
        c_nb_src[l] = b.src_channel(
            "source->nodeblock[" + std::string(layer_name(static_cast<LayerId>(l))) + "]:nodes",
            p_nb, node_bits, n_l[l]);
    }

    std::vector<UnitSpec> units;
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pr = pairs[gi];
        const std::string tag = pair_name(pr);
        const int p_eb = std::max(1, pe.groups.edgeblock_pes[gi]);
        const int p_agg = std::max(1, pe.groups.aggregate_pes[gi]);
        const std::int64_t m = w.edges_per_group[gi];
        const std::int64_t ni = n_l[static_cast<int>(pr.inner)];
        const std::int64_t no = n_l[static_cast<int>(pr.outer)];

        UnitSpec eb{"edgeblock[" + tag + "]", p_eb, cost.ii_edge, cost.depth_edge};
        eb.phases.push_back(
            {PhaseKind::fill, {{c_fill_in[gi], ni}, {c_fill_out[gi], no}}, {}, 0});
        eb.phases.push_back({PhaseKind::map, {{c_edges[gi], m}}, {{c_ea[gi], m}, {c_ec[gi], m}}, 0});
        units.push_back(std::move(eb));

        UnitSpec agg{"aggregate[" + tag + "]", p_agg, cost.ii_aggregate, cost.depth_aggregate};
        agg.phases.push_back({PhaseKind::map, {{c_ea[gi], m}}, {}, 0});
        agg.phases.push_back({PhaseKind::wait, {}, {}, cost.depth_aggregate + ep});
        agg.phases.push_back({PhaseKind::feed, {}, {{c_an[gi], no}}, 0});
        units.push_back(std::move(agg));
    }
    for (int l = 0; l < num_layers; ++l) {
        const int p_nb = std::max(1, pe.groups.nodeblock_pes[l]);
        PhaseSpec ls{PhaseKind::lockstep};
        ls.ins.push_back({c_nb_src[l], n_l[l]});
        int sources = 1;
        for (int gi = 0; gi < num_edge_groups; ++gi) {
            if (static_cast<int>(pairs[gi].outer) == l) {
                ls.ins.push_back({c_an[gi], n_l[l]});
                ++sources;
            }
        }
        for (int gi = 0; gi < num_edge_groups; ++gi) {
            if (static_cast<int>(pairs[gi].inner) == l) ls.outs.push_back({c_nc_in[gi], n_l[l]});
            if (static_cast<int>(pairs[gi].outer) == l) ls.outs.push_back({c_nc_out[gi], n_l[l]});
        }
        UnitSpec nb{"nodeblock[" + std::string(layer_name(static_cast<LayerId>(l))) + "]", p_nb,
                    cost.ii_node, cost.depth_node + ceil_log2(sources + 1)};
        nb.phases.push_back(std::move(ls));
        units.push_back(std::move(nb));
    }
    for (int gi = 0; gi < num_edge_groups; ++gi) {
        const auto pr = pairs[gi];
        const std::string tag = pair_name(pr);
        const int p_cls = std::max(1, pe.groups.edgeblock_pes[gi]);  // mirrors Edgeblock
        const std::int64_t m = w.edges_per_group[gi];
        const std::int64_t ni = n_l[static_cast<int>(pr.inner)];
        const std::int64_t no = n_l[static_cast<int>(pr.outer)];

        UnitSpec cls{"classifier[" + tag + "]", p_cls, cost.ii_classifier, cost.depth_classifier};
        cls.phases.push_back({PhaseKind::fill, {{c_nc_in[gi], ni}, {c_nc_out[gi], no}}, {}, 0});
        cls.phases.push_back({PhaseKind::map, {{c_ec[gi], m}}, {{c_out[gi], m}}, 0});
        units.push_back(std::move(cls));
    }

    b.finish(std::move(units));
    return b.spec;
}

namespace {

std::string pe_description(const PeConfig& pe) {
    if (pe.variant == Variant::mpa) {
        return std::to_string(pe.mpa_pes) + " system PEs";
    }
    return std::to_string(pe.groups.total_nodeblock()) + "N+" +
           std::to_string(pe.groups.total_edgeblock()) + "E+" +
           std::to_string(pe.groups.total_aggregate()) + "A PEs";
}

int total_pes(const PeConfig& pe) {
    if (pe.variant == Variant::mpa) return 3 * pe.mpa_pes;
    return pe.groups.total();
}

}  // namespace

SimReport simulate(const PeConfig& pe, const Workload& w, const CostModel& cost,
                   double clock_mhz, const FifoConfig& fifos, const SimOptions& opts) {
    if (clock_mhz <= 0) throw std::invalid_argument("simulate: clock must be positive");
    const PipelineSpec spec = build_pipeline(pe, w, cost);
    SimReport r = run_pipeline(spec, fifos, clock_mhz, opts);
    r.variant = pe.variant;
    r.pe_desc = pe_description(pe);
    r.total_pes = total_pes(pe);
    return r;
}

std::vector<SweepPoint> sweep_pes(Variant variant, int pe_min, int pe_max, const Workload& w,
                                  const CostModel& cost, double clock_mhz,
                                  const ModelDims& dims) {
    if (pe_min < 1 || pe_max < pe_min) throw std::invalid_argument("sweep_pes: bad PE range");
    std::vector<SweepPoint> points;
    GroupWorkloads gw;
    gw.node_sizes = w.nodes_per_group;
    gw.edge_sizes = w.edges_per_group;
    for (int n = pe_min; n <= pe_max; ++n) {
        PeConfig pe;
        if (variant == Variant::mpa) {
            pe = mpa_config(n);
        } else {
            Allocation a;
            a.nodeblock_pes.fill(n);
            a.edgeblock_pes.fill(n);
            a.aggregate_pes.fill(n);
            pe = geo_config(a, variant == Variant::mpa_geo_rsrc);
        }
        SweepPoint pt;
        pt.pes = n;
        pt.report = simulate(pe, w, cost, clock_mhz, unbounded_fifos());
        std::int64_t fifo_bits = 0;
        const PipelineSpec spec = build_pipeline(pe, w, cost);
        for (std::size_t i = 0; i < spec.channels.size(); ++i) {
            fifo_bits += pt.report.channels[i].peak * spec.channels[i].token_bits;
        }
        pt.resources = estimate_resources(pe, gw, dims, fifo_bits);
        points.push_back(std::move(pt));
    }
    return points;
}

FifoConfig min_fifo_depths(const PeConfig& pe, const Workload& w, const CostModel& cost,
                           double clock_mhz, const SimOptions& opts) {
    return min_fifo_depths(build_pipeline(pe, w, cost), clock_mhz, opts);
}

FifoConfig min_fifo_depths(const PipelineSpec& spec, double clock_mhz, const SimOptions& opts) {
    const FifoConfig unbounded = unbounded_fifos();
    const SimReport base = run_pipeline(spec, unbounded, clock_mhz, opts);
    if (base.deadlock) {
        throw std::runtime_error("min_fifo_depths: pipeline deadlocks even unbounded");
    }

    FifoConfig current = unbounded;
    // Event times in this deterministic dataflow are monotone non-increasing
    // in FIFO capacity, so "every graph completes at the unbounded time" is a
    // monotone predicate and per-channel binary search is sound. The interval
    // (a difference of event times) is not monotone and cannot drive the
    // search directly.
    auto profile_ok = [&](const FifoConfig& f) {
        const SimReport r = run_pipeline(spec, f, clock_mhz, opts);
        return !r.deadlock && r.graph_done_cycle == base.graph_done_cycle;
    };
    auto interval_ok = [&](const FifoConfig& f) {
        const SimReport r = run_pipeline(spec, f, clock_mhz, opts);
        return !r.deadlock && r.interval_cycles == base.interval_cycles;
    };

    // Scheduling quantization makes the predicate only approximately
    // monotone, so bisection is a guide and every assigned capacity is one
    // that was explicitly verified (falling back to unbounded when the scan
    // saw no passing point).
    for (const auto& ch : spec.channels) {
        if (!ch.searchable) continue;
        int lo = 1;
        int hi = 1 << 28;
        // Capacities above the observed unbounded peak are equivalent.
        for (std::size_t i = 0; i < spec.channels.size(); ++i) {
            if (spec.channels[i].name == ch.name) {
                hi = std::max<int>(1, static_cast<int>(base.channels[i].peak));
            }
        }
        int best_verified = 1 << 28;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            current.depths[ch.name] = mid;
            if (profile_ok(current)) {
                best_verified = mid;
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if (best_verified > hi) {
            current.depths[ch.name] = hi;
            if (profile_ok(current)) best_verified = hi;
        }
        current.depths[ch.name] = best_verified;
    }

    // Interval-preservation is weaker than profile-preservation, so some
    // channel may still shrink without moving the interval. Sweep until a
    // full pass finds every channel irreducible: the cheap probe is depth-1
    // (exactly the minimality condition); only a reducible channel pays for
    // a verified bisection. Every accepted shrink is re-checked, so the
    // result never depends on monotonicity.
    bool changed = true;
    int sweeps = 0;
    while (changed && sweeps < 64) {
        changed = false;
        ++sweeps;
        for (const auto& ch : spec.channels) {
            if (!ch.searchable) continue;
            const int depth = current.depths[ch.name];
            if (depth <= 1) continue;
            {
                FifoConfig probe = current;
                probe.depths[ch.name] = depth - 1;
                if (!interval_ok(probe)) continue;  // already minimal here
            }
            int best = depth - 1;
            int lo = 1;
            int hi = depth - 1;
            while (lo < hi) {
                const int mid = lo + (hi - lo) / 2;
                FifoConfig trial = current;
                trial.depths[ch.name] = mid;
                if (interval_ok(trial)) {
                    best = mid;
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            current.depths[ch.name] = best;
            changed = true;
        }
    }
    current.default_depth = unbounded.default_depth;  // non-searchable channels stay open
    return current;
}

// --- Calibration ---------------------------------------------------------------

std::vector<std::string> cost_model_param_names() {
    return {"ii_edge",    "ii_aggregate",    "ii_node",    "ii_classifier",
            "depth_edge", "depth_aggregate", "depth_node", "depth_classifier"};
}

int get_cost_param(const CostModel& m, const std::string& name) {
    if (name == "ii_edge") return m.ii_edge;
    if (name == "ii_aggregate") return m.ii_aggregate;
    if (name == "ii_node") return m.ii_node;
    if (name == "ii_classifier") return m.ii_classifier;
    if (name == "depth_edge") return m.depth_edge;
    if (name == "depth_aggregate") return m.depth_aggregate;
    if (name == "depth_node") return m.depth_node;
    if (name == "depth_classifier") return m.depth_classifier;
    throw std::invalid_argument("unknown cost parameter: " + name);
}

void set_cost_param(CostModel& m, const std::string& name, int value) {
    if (name == "ii_edge") m.ii_edge = value;
    else if (name == "ii_aggregate") m.ii_aggregate = value;
    else if (name == "ii_node") m.ii_node = value;
    else if (name == "ii_classifier") m.ii_classifier = value;
    else if (name == "depth_edge") m.depth_edge = value;
    else if (name == "depth_aggregate") m.depth_aggregate = value;
    else if (name == "depth_node") m.depth_node = value;
    else if (name == "depth_classifier") m.depth_classifier = value;
    else throw std::invalid_argument("unknown cost parameter: " + name);
}

namespace {

bool is_ii_param(const std::string& name) { return name.rfind("ii_", 0) == 0; }

struct Objective {
    double max_rel_err;
    std::vector<CalResidual> residuals;
};

Objective evaluate(const std::vector<CalTarget>& targets, const CostModel& m) {
    Objective obj{0.0, {}};
    for (const auto& t : targets) {
        const SimReport r = simulate(t.pe, t.workload, m, t.clock_mhz, unbounded_fifos());
        if (r.deadlock) {
            obj.max_rel_err = 1e18;  // unusable parameter point
            obj.residuals.clear();
            return obj;
        }
        CalResidual res;
        res.target = t.name;
        res.sim_latency_us = r.latency_us();
        res.sim_interval_us = r.interval_us();
        res.latency_rel_err =
            t.latency_us > 0 ? std::abs(r.latency_us() - t.latency_us) / t.latency_us : 0.0;
        res.interval_rel_err =
            t.interval_us > 0 ? std::abs(r.interval_us() - t.interval_us) / t.interval_us : 0.0;
        obj.max_rel_err = std::max({obj.max_rel_err, res.latency_rel_err, res.interval_rel_err});
        obj.residuals.push_back(std::move(res));
    }
    return obj;
}

}  // namespace

PeConfig default_pe_config(Variant v, const Workload& w, int mpa_pes) {
    if (v == Variant::mpa) return mpa_config(mpa_pes);
    GroupWorkloads gw;
    gw.node_sizes = w.nodes_per_group;
    gw.edge_sizes = w.edges_per_group;
    if (v == Variant::mpa_geo) return geo_config(allocate_uniform(gw), false);
    return geo_config(allocate_data_aware(gw), true);
}

std::vector<CalTarget> reference_targets() {
    const Workload w = nominal_workload();
    return {
        {"mpa", default_pe_config(Variant::mpa, w, 8), w, 200.0, 3.165, 0.48},
        {"mpa_geo", default_pe_config(Variant::mpa_geo, w), w, 200.0, 2.69, 0.425},
        {"mpa_geo_rsrc", default_pe_config(Variant::mpa_geo_rsrc, w), w, 200.0, 2.07, 0.31},
    };
}

CalibrationResult calibrate(const std::vector<CalTarget>& targets,
                            const std::vector<std::string>& free_params, const CostModel& base,
                            const CalBounds& bounds) {
    if (targets.empty()) throw std::invalid_argument("calibrate: at least one target required");
    for (const auto& name : free_params) (void)get_cost_param(base, name);  // validate names

    auto range_of = [&](const std::string& name) {
        return is_ii_param(name) ? std::pair<int, int>{bounds.ii_min, bounds.ii_max}
                                 : std::pair<int, int>{bounds.depth_min, bounds.depth_max};
    };

    CostModel best = base;
    Objective best_obj = evaluate(targets, best);

    if (free_params.empty()) {
        return {best, best_obj.residuals, best_obj.max_rel_err};
    }

    if (free_params.size() <= 2) {
        // Exhaustive grid, first minimum wins.
        const auto [lo0, hi0] = range_of(free_params[0]);
        const auto [lo1, hi1] = free_params.size() == 2 ? range_of(free_params[1])
                                                        : std::pair<int, int>{0, 0};
        for (int v0 = lo0; v0 <= hi0; ++v0) {
            for (int v1 = lo1; v1 <= hi1; ++v1) {
                CostModel m = base;
                set_cost_param(m, free_params[0], v0);
                if (free_params.size() == 2) set_cost_param(m, free_params[1], v1);
                const Objective obj = evaluate(targets, m);
                if (obj.max_rel_err < best_obj.max_rel_err) {
                    best = m;
                    best_obj = obj;
                }
                if (best_obj.max_rel_err == 0.0) {
                    return {best, best_obj.residuals, best_obj.max_rel_err};
                }
            }
        }
        return {best, best_obj.residuals, best_obj.max_rel_err};
    }

    // Coordinate descent with full line scans, repeated until stable.
    bool improved = true;
    int passes = 0;
    while (improved && passes < 8) {
        improved = false;
        ++passes;
        for (const auto& name : free_params) {
            const auto [lo, hi] = range_of(name);
            for (int v = lo; v <= hi; ++v) {
                CostModel m = best;
                set_cost_param(m, name, v);
                const Objective obj = evaluate(targets, m);
                if (obj.max_rel_err < best_obj.max_rel_err) {
                    best = m;
                    best_obj = obj;
                    improved = true;
                }
            }
        }
        if (best_obj.max_rel_err == 0.0) break;
    }
    return {best, best_obj.residuals, best_obj.max_rel_err};
}

}  // namespace trackgnn
