#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgsched/jobshop.hpp"
#include "dgsched/solver.hpp"
#include "dgsched/task_model.hpp"
#include "dgsched/time.hpp"

namespace dgsched {

class cycle_error : public std::runtime_error {
public:
    explicit cycle_error(const std::string& msg, std::vector<std::uint32_t> witness = {})
        : std::runtime_error(msg), cycle(std::move(witness)) {}
    std::vector<std::uint32_t> cycle;
};

// DAG over segment occurrences: intra-task chains (including occurrence
// chaining) plus one total-order chain per resource. Vertex weights are WCETs.
struct DependencyGraph {
    struct Vertex {
        std::uint32_t task{0};
        std::uint32_t occurrence{0};
        std::uint32_t segment{0};
        Time wcet{0};
        std::optional<std::uint32_t> resource;
        Time release{0};  // occurrence release, 0 for frame-based
    };

    std::vector<Vertex> vertices;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> task_edges;
    std::vector<std::vector<std::uint32_t>> resource_chains;  // per resource, head to tail

    // indexing
    std::vector<std::size_t> task_offset;    // first vertex of (task, occ 0, seg 0)
    std::vector<std::uint32_t> occ_count;    // occurrences per task
    std::vector<std::uint32_t> eta;          // segments per task

    std::size_t vertex_id(std::uint32_t task, std::uint32_t occ, std::uint32_t seg) const {
        return task_offset[task] + static_cast<std::size_t>(occ) * eta[task] + seg;
    }

    std::vector<std::vector<std::uint32_t>> successors() const {
        std::vector<std::vector<std::uint32_t>> succ(vertices.size());
        for (const auto& [a, b] : task_edges) succ[a].push_back(b);
        for (const auto& chain : resource_chains)
            for (std::size_t k = 0; k + 1 < chain.size(); ++k)
                succ[chain[k]].push_back(chain[k + 1]);
        return succ;
    }

    std::vector<std::vector<std::uint32_t>> predecessors() const {
        std::vector<std::vector<std::uint32_t>> pred(vertices.size());
        for (const auto& [a, b] : task_edges) pred[b].push_back(a);
        for (const auto& chain : resource_chains)
            for (std::size_t k = 0; k + 1 < chain.size(); ++k)
                pred[chain[k + 1]].push_back(chain[k]);
        return pred;
    }
};

namespace graph_detail {

// Vertices and intra-task edges for a given occurrence count per task.
inline DependencyGraph skeleton(const TaskSet& ts, const std::vector<std::uint32_t>& occs) {
    DependencyGraph g;
    g.resource_chains.resize(ts.resources);
    g.occ_count = occs;
    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i) {
        const Task& t = ts.tasks[i];
        g.task_offset.push_back(g.vertices.size());
        g.eta.push_back(static_cast<std::uint32_t>(t.segments.size()));
        for (std::uint32_t occ = 0; occ < occs[i]; ++occ) {
            for (std::uint32_t s = 0; s < t.segments.size(); ++s) {
                DependencyGraph::Vertex v;
                v.task = i;
                v.occurrence = occ;
                v.segment = s;
                v.wcet = t.segments[s].wcet;
                v.resource = t.segments[s].resource;
                v.release = checked_mul(static_cast<Time>(occ), t.period);
                g.vertices.push_back(v);
                if (s > 0)
                    g.task_edges.push_back(
                        {static_cast<std::uint32_t>(g.vertices.size() - 2),
                         static_cast<std::uint32_t>(g.vertices.size() - 1)});
            }
            // jobs of one task may not overlap: chain occurrence boundaries
            if (occ > 0 && !t.segments.empty()) {
                const auto prev_last =
                    static_cast<std::uint32_t>(g.vertex_id(i, occ - 1, g.eta[i] - 1));
                const auto cur_first = static_cast<std::uint32_t>(g.vertex_id(i, occ, 0));
                g.task_edges.push_back({prev_last, cur_first});
            }
        }
    }
    return g;
}

inline std::vector<std::uint32_t> occurrences(const TaskSet& ts) {
    std::vector<std::uint32_t> occs;
    if (ts.release_model == ReleaseModel::FrameBased) {
        occs.assign(ts.tasks.size(), 1);
    } else {
        const Time h = hyperperiod(ts);
        for (const Task& t : ts.tasks)
            occs.push_back(static_cast<std::uint32_t>(h / t.period));
    }
    return occs;
}

}  // namespace graph_detail

// Longest weighted path; weights are vertex WCETs. Throws cycle_error with a
// witness cycle on cyclic input.
inline Time critical_path_length(const DependencyGraph& g) {
    const std::size_t n = g.vertices.size();
    const auto succ = g.successors();
    std::vector<std::uint32_t> indeg(n, 0);
    for (const auto& s : succ)
        for (std::uint32_t w : s) ++indeg[w];

    std::vector<Time> len(n);
    std::vector<std::uint32_t> stack;
    for (std::uint32_t v = 0; v < n; ++v) {
        len[v] = g.vertices[v].wcet;
        if (indeg[v] == 0) stack.push_back(v);
    }
    Time best = 0;
    std::size_t seen = 0;
    while (!stack.empty()) {
        const std::uint32_t v = stack.back();
        stack.pop_back();
        ++seen;
        best = std::max(best, len[v]);
        for (std::uint32_t w : succ[v]) {
            len[w] = std::max(len[w], checked_add(len[v], g.vertices[w].wcet));
            if (--indeg[w] == 0) stack.push_back(w);
        }
    }
    if (seen != n) {
        // recover a witness cycle among the unprocessed vertices
        std::vector<std::uint32_t> color(n, 0);
        std::vector<std::uint32_t> path;
        std::vector<std::uint32_t> witness;
        std::function<bool(std::uint32_t)> dfs = [&](std::uint32_t v) {
            color[v] = 1;
            path.push_back(v);
            for (std::uint32_t w : succ[v]) {
                if (color[w] == 1) {
                    const auto it = std::find(path.begin(), path.end(), w);
                    witness.assign(it, path.end());
                    return true;
                }
                if (color[w] == 0 && dfs(w)) return true;
            }
            color[v] = 2;
            path.pop_back();
            return false;
        };
        for (std::uint32_t v = 0; v < n && witness.empty(); ++v)
            if (color[v] == 0) dfs(v);
        throw cycle_error("dependency graph contains a cycle", witness);
    }
    return best;
}

inline bool is_acyclic(const DependencyGraph& g) {
    try {
        critical_path_length(g);
        return true;
    } catch (const cycle_error&) {
        return false;
    }
}

namespace graph_detail {

// The schedule must come from an instance reduced from this task set: every
// critical-section occurrence has exactly one operation on its resource machine.
inline void check_instance_matches(const TaskSet& ts, const JobShopInstance& inst,
                                   const std::vector<std::uint32_t>& occs) {
    std::vector<std::vector<std::uint32_t>> cs_seen(ts.tasks.size());
    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i)
        cs_seen[i].assign(static_cast<std::size_t>(occs[i]) * ts.tasks[i].segments.size(), 0);
    for (const ShopJob& job : inst.jobs)
        for (const ShopOperation& op : job.operations) {
            const SourceRef& src = op.source;
            if (src.task >= ts.tasks.size() ||
                src.segment >= ts.tasks[src.task].segments.size() ||
                src.occurrence >= occs[src.task])
                throw std::invalid_argument("schedule/instance mismatch: bad source reference");
            const Segment& seg = ts.tasks[src.task].segments[src.segment];
            if (op.processing != seg.wcet)
                throw std::invalid_argument("schedule/instance mismatch: processing differs from wcet");
            if (seg.is_critical() && op.machine != *seg.resource)
                throw std::invalid_argument("schedule/instance mismatch: wrong resource machine");
            ++cs_seen[src.task][static_cast<std::size_t>(src.occurrence) *
                                    ts.tasks[src.task].segments.size() + src.segment];
        }
    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i)
        for (std::uint32_t occ = 0; occ < occs[i]; ++occ)
            for (std::uint32_t s = 0; s < ts.tasks[i].segments.size(); ++s) {
                const bool critical = ts.tasks[i].segments[s].is_critical();
                const std::uint32_t hits =
                    cs_seen[i][static_cast<std::size_t>(occ) * ts.tasks[i].segments.size() + s];
                if (critical && hits != 1)
                    throw std::invalid_argument(
                        "schedule/instance mismatch: critical section not covered exactly once");
                if (!critical && hits > 1)
                    throw std::invalid_argument(
                        "schedule/instance mismatch: duplicated non-critical operation");
            }
}

}  // namespace graph_detail

// Resource chains follow the execution order of the resource machines in the
// given schedule. The temporal order of a feasible schedule is a topological
// witness, so the result is acyclic; this is asserted anyway.
inline DependencyGraph build_from_schedule(const TaskSet& ts, const JobShopInstance& inst,
                                           const ShopSchedule& s) {
    detail::require_valid(ts, "build_from_schedule");
    const auto occs = graph_detail::occurrences(ts);
    graph_detail::check_instance_matches(ts, inst, occs);
    const OpIndexer ix(inst);
    if (s.start.size() != ix.count)
        throw std::invalid_argument("schedule/instance mismatch: start vector size");

    DependencyGraph g = graph_detail::skeleton(ts, occs);

    struct ChainEntry {
        Time start;
        std::uint32_t vertex;
    };
    std::vector<std::vector<ChainEntry>> chains(ts.resources);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j)
        for (std::size_t p = 0; p < inst.jobs[j].operations.size(); ++p) {
            const ShopOperation& op = inst.jobs[j].operations[p];
            const Segment& seg = ts.tasks[op.source.task].segments[op.source.segment];
            if (!seg.is_critical()) continue;
            chains[*seg.resource].push_back(
                {s.start[ix.id(j, p)],
                 static_cast<std::uint32_t>(
                     g.vertex_id(op.source.task, op.source.occurrence, op.source.segment))});
        }
    for (std::uint32_t r = 0; r < ts.resources; ++r) {
        auto& c = chains[r];
        std::sort(c.begin(), c.end(), [](const ChainEntry& a, const ChainEntry& b) {
            return a.start < b.start || (a.start == b.start && a.vertex < b.vertex);
        });
        for (std::size_t k = 0; k + 1 < c.size(); ++k)
            if (c[k].start == c[k + 1].start)
                throw std::invalid_argument(
                    "two critical sections of one resource share a start time; "
                    "input schedule is infeasible");
        for (const ChainEntry& e : c) g.resource_chains[r].push_back(e.vertex);
    }

    if (!is_acyclic(g))
        throw cycle_error("graph built from schedule is cyclic; input schedule is infeasible");
    return g;
}

// Places every segment at [L(v) - wcet, L(v)) where L(v) is the longest path
// ending at v. The resulting shop schedule has makespan exactly equal to the
// critical path length. Frame-based only.
inline ShopSchedule schedule_from_graph(const TaskSet& ts, const JobShopInstance& inst,
                                        const DependencyGraph& g) {
    detail::require_valid(ts, "schedule_from_graph");
    if (ts.release_model != ReleaseModel::FrameBased)
        throw std::invalid_argument("schedule_from_graph requires a frame-based task set");
    const auto occs = graph_detail::occurrences(ts);
    graph_detail::check_instance_matches(ts, inst, occs);

    // longest path ending at each vertex (inclusive of its own weight)
    const std::size_t n = g.vertices.size();
    const auto succ = g.successors();
    std::vector<std::uint32_t> indeg(n, 0);
    for (const auto& sv : succ)
        for (std::uint32_t w : sv) ++indeg[w];
    std::vector<Time> len(n);
    std::vector<std::uint32_t> stack;
    for (std::uint32_t v = 0; v < n; ++v) {
        len[v] = g.vertices[v].wcet;
        if (indeg[v] == 0) stack.push_back(v);
    }
    std::size_t seen = 0;
    while (!stack.empty()) {
        const std::uint32_t v = stack.back();
        stack.pop_back();
        ++seen;
        for (std::uint32_t w : succ[v]) {
            len[w] = std::max(len[w], checked_add(len[v], g.vertices[w].wcet));
            if (--indeg[w] == 0) stack.push_back(w);
        }
    }
    if (seen != n) throw cycle_error("schedule_from_graph requires an acyclic graph");

    const OpIndexer ix(inst);
    ShopSchedule s;
    s.instance = &inst;
    s.start.assign(ix.count, 0);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j)
        for (std::size_t p = 0; p < inst.jobs[j].operations.size(); ++p) {
            const SourceRef& src = inst.jobs[j].operations[p].source;
            const std::size_t v = g.vertex_id(src.task, src.occurrence, src.segment);
            s.start[ix.id(j, p)] = len[v] - g.vertices[v].wcet;
        }
    s.objective = objective(inst, s.start);
    return s;
}

// DOT export: solid intra-task edges, one style per resource chain.
inline std::string graph_dot(const DependencyGraph& g) {
    static const char* kStyles[] = {"dashed", "dotted", "bold", "solid"};
    static const char* kColors[] = {"red", "blue", "darkgreen", "orange", "purple", "brown"};
    std::ostringstream os;
    os << "digraph dependencies {\n";
    for (std::uint32_t v = 0; v < g.vertices.size(); ++v) {
        const auto& vx = g.vertices[v];
        os << "  v" << v << " [label=\"t" << vx.task;
        if (g.occ_count.size() > vx.task && g.occ_count[vx.task] > 1)
            os << "j" << vx.occurrence;
        os << "s" << vx.segment << "\\n" << vx.wcet << "\""
           << (vx.resource ? ", shape=box" : ", shape=ellipse") << "];\n";
    }
    for (const auto& [a, b] : g.task_edges)
        os << "  v" << a << " -> v" << b << ";\n";
    for (std::uint32_t r = 0; r < g.resource_chains.size(); ++r)
        for (std::size_t k = 0; k + 1 < g.resource_chains[r].size(); ++k)
            os << "  v" << g.resource_chains[r][k] << " -> v" << g.resource_chains[r][k + 1]
               << " [style=" << kStyles[r % 4] << ", color=" << kColors[r % 6] << "];\n";
    os << "}\n";
    return os.str();
}

}  // namespace dgsched
