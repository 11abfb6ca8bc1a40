#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgsched/depgraph.hpp"
#include "dgsched/task_model.hpp"
#include "dgsched/time.hpp"

namespace dgsched {

enum class CsMode { PreemptiveCS, NonPreemptiveCS };

// Relative deadline per (task, segment); identical across occurrences.
struct SubJobDeadlines {
    std::vector<std::vector<Time>> relative;
};

// Backward suffix slack over the intra-task chain: a segment's deadline is
// the job deadline minus the work that still has to run after it. Monotone
// non-decreasing along the chain, so EDF never favours a later segment of
// the same job over an earlier one.
inline SubJobDeadlines assign_subjob_deadlines(const TaskSet& ts, const DependencyGraph& g) {
    if (!is_acyclic(g))
        throw std::invalid_argument("assign_subjob_deadlines requires an acyclic graph");
    SubJobDeadlines out;
    for (const Task& t : ts.tasks) {
        std::vector<Time> rel(t.segments.size());
        Time suffix = 0;
        for (std::size_t s = t.segments.size(); s-- > 0;) {
            rel[s] = t.deadline - suffix;
            suffix = checked_add(suffix, t.segments[s].wcet);
        }
        out.relative.push_back(std::move(rel));
    }
    return out;
}

// One contiguous piece of execution of a segment occurrence on a processor.
struct ExecSlice {
    std::uint32_t processor{0};
    Time start{0};
    Time end{0};
    std::uint32_t vertex{0};
};

struct MultiprocSchedule {
    std::vector<ExecSlice> slices;            // ordered by (processor, start)
    std::vector<Time> vertex_completion;      // per graph vertex
    Time horizon{0};                          // last completion
    std::uint32_t processors{1};
};

struct Verdict {
    bool schedulable{true};
    std::uint32_t miss_task{0};
    std::uint32_t miss_occurrence{0};
    Time miss_deadline{0};
    Time miss_completion{0};
    std::string reason;
};

namespace sim_detail {

struct SimVertex {
    Time release;
    Time abs_deadline;
    Time remaining;
    bool critical;
};

// Shared event-driven core for the semi-partitioned and partitioned EDF
// simulators. `proc_of_task[v's task]` pins tasks to processors; an empty
// vector means global (any processor, migration allowed).
inline MultiprocSchedule run_edf(const TaskSet& ts, const DependencyGraph& g,
                                 const SubJobDeadlines& dl, CsMode mode,
                                 const std::vector<std::uint32_t>& proc_of_task) {
    const std::size_t n = g.vertices.size();
    const std::uint32_t m = ts.processors;
    const bool partitioned = !proc_of_task.empty();
    const auto pred = g.predecessors();

    std::vector<SimVertex> sv(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& vx = g.vertices[v];
        sv[v].release = vx.release;
        sv[v].abs_deadline = checked_add(vx.release, dl.relative[vx.task][vx.segment]);
        sv[v].remaining = vx.wcet;
        sv[v].critical = vx.resource.has_value();
    }

    std::vector<Time> completion(n, 0);
    std::vector<bool> done(n, false);
    std::size_t open = n;
    std::vector<std::int32_t> running(m, -1);    // vertex per processor
    std::vector<Time> piece_start(m, 0);
    MultiprocSchedule out;
    out.processors = m;

    std::vector<Time> release_events;
    for (std::size_t v = 0; v < n; ++v) release_events.push_back(sv[v].release);
    std::sort(release_events.begin(), release_events.end());
    release_events.erase(std::unique(release_events.begin(), release_events.end()),
                         release_events.end());
    std::size_t next_release = 0;

    auto eligible = [&](std::size_t v, Time t) {
        if (done[v] || sv[v].release > t) return false;
        for (std::uint32_t p : pred[v])
            if (!done[p]) return false;
        return true;
    };

    Time t = 0;
    while (open > 0) {
        while (next_release < release_events.size() && release_events[next_release] <= t)
            ++next_release;

        // zero-wcet vertices (possible in hand-built graphs) complete instantly
        bool instant = true;
        while (instant) {
            instant = false;
            for (std::uint32_t v = 0; v < n; ++v)
                if (sv[v].remaining == 0 && eligible(v, t)) {
                    completion[v] = t;
                    done[v] = true;
                    --open;
                    instant = true;
                }
        }
        if (open == 0) break;

        // candidates sorted by (deadline, task, occurrence, segment)
        std::vector<std::uint32_t> cand;
        for (std::uint32_t v = 0; v < n; ++v)
            if (eligible(v, t)) cand.push_back(v);
        std::sort(cand.begin(), cand.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (sv[a].abs_deadline != sv[b].abs_deadline)
                return sv[a].abs_deadline < sv[b].abs_deadline;
            const auto& va = g.vertices[a];
            const auto& vb = g.vertices[b];
            if (va.task != vb.task) return va.task < vb.task;
            if (va.occurrence != vb.occurrence) return va.occurrence < vb.occurrence;
            return va.segment < vb.segment;
        });

        // a running critical section is pinned under non-preemptive mode
        std::vector<bool> pinned(m, false);
        std::vector<std::int32_t> selected(m, -1);
        std::vector<bool> chosen(n, false);
        if (mode == CsMode::NonPreemptiveCS)
            for (std::uint32_t p = 0; p < m; ++p)
                if (running[p] >= 0 && sv[running[p]].critical) {
                    pinned[p] = true;
                    selected[p] = running[p];
                    chosen[running[p]] = true;
                }

        if (!partitioned) {
            // global pick: top eligible by deadline into the free slots,
            // keeping continuing vertices on their processor
            std::vector<std::uint32_t> picks;
            std::uint32_t slots = 0;
            for (std::uint32_t p = 0; p < m; ++p)
                if (!pinned[p]) ++slots;
            for (std::uint32_t v : cand) {
                if (picks.size() >= slots) break;
                if (!chosen[v]) picks.push_back(v);
            }
            // keep already-running picks in place
            std::vector<bool> placed(picks.size(), false);
            for (std::uint32_t p = 0; p < m; ++p) {
                if (pinned[p] || running[p] < 0) continue;
                for (std::size_t k = 0; k < picks.size(); ++k)
                    if (!placed[k] && picks[k] == static_cast<std::uint32_t>(running[p])) {
                        selected[p] = running[p];
                        placed[k] = true;
                        break;
                    }
            }
            std::size_t k = 0;
            for (std::uint32_t p = 0; p < m; ++p) {
                if (pinned[p] || selected[p] >= 0) continue;
                while (k < picks.size() && placed[k]) ++k;
                if (k < picks.size()) {
                    selected[p] = static_cast<std::int32_t>(picks[k]);
                    placed[k] = true;
                }
            }
        } else {
            // per-processor pick among the tasks bound to it
            for (std::uint32_t p = 0; p < m; ++p) {
                if (pinned[p]) continue;
                for (std::uint32_t v : cand)
                    if (!chosen[v] && proc_of_task[g.vertices[v].task] == p) {
                        selected[p] = static_cast<std::int32_t>(v);
                        chosen[v] = true;
                        break;
                    }
            }
        }

        // emit slices for vertices that stop running on their processor
        for (std::uint32_t p = 0; p < m; ++p) {
            if (running[p] >= 0 && selected[p] != running[p]) {
                if (t > piece_start[p])
                    out.slices.push_back({p, piece_start[p], t,
                                          static_cast<std::uint32_t>(running[p])});
                running[p] = -1;
            }
            if (selected[p] >= 0 && running[p] != selected[p]) {
                running[p] = selected[p];
                piece_start[p] = t;
            }
        }

        // next event: earliest completion among running, or next release
        Time nt = std::numeric_limits<Time>::max();
        for (std::uint32_t p = 0; p < m; ++p)
            if (running[p] >= 0)
                nt = std::min(nt, checked_add(t, sv[running[p]].remaining));
        if (next_release < release_events.size())
            nt = std::min(nt, release_events[next_release]);
        if (nt == std::numeric_limits<Time>::max())
            throw std::logic_error("simulation stalled with unfinished work");

        for (std::uint32_t p = 0; p < m; ++p) {
            if (running[p] < 0) continue;
            const std::uint32_t v = static_cast<std::uint32_t>(running[p]);
            sv[v].remaining -= (nt - t);
            if (sv[v].remaining == 0) {
                out.slices.push_back({p, piece_start[p], nt, v});
                completion[v] = nt;
                done[v] = true;
                --open;
                running[p] = -1;
            }
        }
        t = nt;
    }

    out.vertex_completion = std::move(completion);
    out.horizon = 0;
    for (const ExecSlice& s : out.slices) out.horizon = std::max(out.horizon, s.end);
    std::sort(out.slices.begin(), out.slices.end(), [](const ExecSlice& a, const ExecSlice& b) {
        if (a.processor != b.processor) return a.processor < b.processor;
        if (a.start != b.start) return a.start < b.start;
        return a.vertex < b.vertex;
    });
    return out;
}

}  // namespace sim_detail

// Semi-partitioned list scheduling: whenever a processor idles and eligible
// sub-jobs exist, the one with the earliest absolute deadline starts.
inline MultiprocSchedule list_edf(const TaskSet& ts, const DependencyGraph& g,
                                  const SubJobDeadlines& dl, CsMode mode) {
    return sim_detail::run_edf(ts, g, dl, mode, {});
}

// Worst-fit decreasing-utilization partition; ties go to the lowest index.
inline std::vector<std::uint32_t> worst_fit_partition(const TaskSet& ts) {
    std::vector<std::size_t> order(ts.tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const int c = Rational::compare(utilization(ts.tasks[a]), utilization(ts.tasks[b]));
        if (c != 0) return c > 0;
        return a < b;
    });
    std::vector<Rational> load(ts.processors, Rational(0));
    std::vector<std::uint32_t> proc_of_task(ts.tasks.size(), 0);
    for (std::size_t i : order) {
        std::uint32_t best = 0;
        for (std::uint32_t p = 1; p < ts.processors; ++p)
            if (load[p] < load[best]) best = p;
        proc_of_task[i] = best;
        load[best] = load[best] + utilization(ts.tasks[i]);
    }
    return proc_of_task;
}

inline MultiprocSchedule p_edf(const TaskSet& ts, const DependencyGraph& g,
                               const SubJobDeadlines& dl,
                               CsMode mode = CsMode::NonPreemptiveCS) {
    return sim_detail::run_edf(ts, g, dl, mode, worst_fit_partition(ts));
}

// Exact verdict over one hyper-period: every job occurrence must complete by
// its absolute deadline, and no execution may cross the hyper-period boundary
// (the static table repeats, so carry-in must be empty).
inline Verdict check_schedulability(const TaskSet& ts, const DependencyGraph& g,
                                    const MultiprocSchedule& sched) {
    Verdict v;
    const Time h = hyperperiod(ts);
    struct Miss {
        Time deadline;
        std::uint32_t task, occ;
        Time completion;
        const char* why;
    };
    std::optional<Miss> first;
    auto consider = [&](const Miss& cand) {
        if (!first || cand.deadline < first->deadline ||
            (cand.deadline == first->deadline && cand.task < first->task) ||
            (cand.deadline == first->deadline && cand.task == first->task &&
             cand.occ < first->occ))
            first = cand;
    };

    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i) {
        if (ts.tasks[i].segments.empty()) continue;
        for (std::uint32_t occ = 0; occ < g.occ_count[i]; ++occ) {
            const std::size_t last = g.vertex_id(i, occ, g.eta[i] - 1);
            const Time release = g.vertices[last].release;
            const Time deadline = checked_add(release, ts.tasks[i].deadline);
            const Time completion = sched.vertex_completion[last];
            if (completion > deadline)
                consider({deadline, i, occ, completion, "deadline miss"});
            if (completion > h)
                consider({deadline, i, occ, completion, "job crosses hyper-period boundary"});
        }
    }
    if (sched.horizon > h && !first) {
        // some slice ran past the boundary even though completions were timely
        v.schedulable = false;
        v.reason = "execution crosses hyper-period boundary";
        return v;
    }
    if (first) {
        v.schedulable = false;
        v.miss_task = first->task;
        v.miss_occurrence = first->occ;
        v.miss_deadline = first->deadline;
        v.miss_completion = first->completion;
        v.reason = first->why;
    }
    return v;
}

inline Time makespan(const TaskSet& ts, const MultiprocSchedule& sched) {
    if (ts.release_model != ReleaseModel::FrameBased)
        throw std::invalid_argument("makespan is defined for frame-based schedules; use lateness");
    return sched.horizon;
}

inline std::int64_t max_lateness(const TaskSet& ts, const DependencyGraph& g,
                                 const MultiprocSchedule& sched) {
    std::int64_t worst = std::numeric_limits<std::int64_t>::min();
    bool any = false;
    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i) {
        if (ts.tasks[i].segments.empty()) continue;
        for (std::uint32_t occ = 0; occ < g.occ_count[i]; ++occ) {
            const std::size_t last = g.vertex_id(i, occ, g.eta[i] - 1);
            const Time deadline =
                checked_add(g.vertices[last].release, ts.tasks[i].deadline);
            worst = std::max(worst, sched.vertex_completion[last] - deadline);
            any = true;
        }
    }
    return any ? worst : 0;
}

// ---- structural audits -----------------------------------------------------
// Used after every simulated schedule in the test suites: mutual exclusion,
// precedence, exact execution amounts and self-overlap are re-checked from
// the raw slice list, independent of the simulator internals.

inline std::vector<std::string> audit_schedule(const TaskSet& ts, const DependencyGraph& g,
                                               const MultiprocSchedule& sched) {
    (void)ts;
    std::vector<std::string> problems;
    const std::size_t n = g.vertices.size();
    std::vector<Time> executed(n, 0);
    std::vector<Time> first_start(n, std::numeric_limits<Time>::max());
    std::vector<Time> last_end(n, 0);

    for (const ExecSlice& s : sched.slices) {
        if (s.end <= s.start) problems.push_back("empty or negative slice");
        if (s.processor >= sched.processors) problems.push_back("slice on unknown processor");
        executed[s.vertex] += s.end - s.start;
        first_start[s.vertex] = std::min(first_start[s.vertex], s.start);
        last_end[s.vertex] = std::max(last_end[s.vertex], s.end);
    }

    for (std::size_t v = 0; v < n; ++v) {
        if (executed[v] != g.vertices[v].wcet) {
            std::ostringstream os;
            os << "vertex " << v << " executed " << executed[v] << " of wcet "
               << g.vertices[v].wcet;
            problems.push_back(os.str());
        }
        if (first_start[v] != std::numeric_limits<Time>::max() &&
            first_start[v] < g.vertices[v].release)
            problems.push_back("vertex started before its release");
    }

    // per-processor slices must not overlap
    for (std::size_t k = 0; k + 1 < sched.slices.size(); ++k) {
        const ExecSlice& a = sched.slices[k];
        const ExecSlice& b = sched.slices[k + 1];
        if (a.processor == b.processor && b.start < a.end)
            problems.push_back("overlapping slices on one processor");
    }

    // a segment occurrence may not run on two processors at once
    {
        std::vector<ExecSlice> by_vertex = sched.slices;
        std::sort(by_vertex.begin(), by_vertex.end(),
                  [](const ExecSlice& a, const ExecSlice& b) {
                      if (a.vertex != b.vertex) return a.vertex < b.vertex;
                      return a.start < b.start;
                  });
        for (std::size_t k = 0; k + 1 < by_vertex.size(); ++k)
            if (by_vertex[k].vertex == by_vertex[k + 1].vertex &&
                by_vertex[k + 1].start < by_vertex[k].end)
                problems.push_back("segment occurrence overlaps itself across processors");
    }

    // critical sections of one resource are pairwise disjoint
    {
        std::vector<std::vector<std::pair<Time, Time>>> cs(g.resource_chains.size());
        for (const ExecSlice& s : sched.slices) {
            const auto& vx = g.vertices[s.vertex];
            if (vx.resource) cs[*vx.resource].push_back({s.start, s.end});
        }
        for (std::size_t r = 0; r < cs.size(); ++r) {
            std::sort(cs[r].begin(), cs[r].end());
            for (std::size_t k = 0; k + 1 < cs[r].size(); ++k)
                if (cs[r][k + 1].first < cs[r][k].second) {
                    std::ostringstream os;
                    os << "critical sections of resource " << r << " overlap";
                    problems.push_back(os.str());
                }
        }
    }

    // precedence: both graph predecessors must have finished first
    {
        const auto pred = g.predecessors();
        for (std::size_t v = 0; v < n; ++v) {
            if (first_start[v] == std::numeric_limits<Time>::max()) continue;
            for (std::uint32_t p : pred[v])
                if (first_start[v] < last_end[p])
                    problems.push_back("segment started before a predecessor finished");
        }
    }
    return problems;
}

// Work conservation for the semi-partitioned policy: no processor idles while
// an eligible unfinished sub-job exists. Checked from the slice list alone.
inline std::vector<std::string> audit_work_conservation(const TaskSet& ts,
                                                        const DependencyGraph& g,
                                                        const MultiprocSchedule& sched) {
    std::vector<std::string> problems;
    const std::size_t n = g.vertices.size();
    const auto pred = g.predecessors();

    std::vector<Time> events;
    events.push_back(0);
    for (const ExecSlice& s : sched.slices) {
        events.push_back(s.start);
        events.push_back(s.end);
    }
    for (std::size_t v = 0; v < n; ++v) events.push_back(g.vertices[v].release);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    std::vector<Time> completion(n, std::numeric_limits<Time>::max());
    for (std::size_t v = 0; v < n; ++v) {
        Time total = 0;
        for (const ExecSlice& s : sched.slices)
            if (s.vertex == v) total += s.end - s.start;
        if (total == g.vertices[v].wcet) {
            Time last = 0;
            for (const ExecSlice& s : sched.slices)
                if (s.vertex == v) last = std::max(last, s.end);
            completion[v] = last;
        }
    }

    for (std::size_t e = 0; e + 1 < events.size(); ++e) {
        const Time t = events[e];
        if (t >= sched.horizon) break;
        std::uint32_t busy = 0;
        std::vector<bool> running(n, false);
        for (const ExecSlice& s : sched.slices)
            if (s.start <= t && t < s.end) {
                ++busy;
                running[s.vertex] = true;
            }
        if (busy >= sched.processors) continue;
        for (std::uint32_t v = 0; v < n; ++v) {
            if (running[v] || completion[v] <= t) continue;
            if (g.vertices[v].release > t) continue;
            bool ready = true;
            for (std::uint32_t p : pred[v])
                if (completion[p] > t) { ready = false; break; }
            if (ready) {
                std::ostringstream os;
                os << "processor idle at " << t << " while vertex " << v << " was eligible";
                problems.push_back(os.str());
                break;
            }
        }
    }
    (void)ts;
    return problems;
}

// List-scheduling bound: makespan is at most the critical path length plus
// the average per-processor workload. Holds for every work-conserving
// schedule of the dependency graph; checked exactly in integers.
inline bool graham_bound_holds(const TaskSet& ts, const DependencyGraph& g,
                               const MultiprocSchedule& sched) {
    if (ts.release_model != ReleaseModel::FrameBased)
        throw std::invalid_argument("graham bound check applies to frame-based schedules");
    Time total = 0;
    for (const Task& t : ts.tasks) total = checked_add(total, t.total_wcet());
    const Time len = critical_path_length(g);
    // makespan * M <= len * M + total
    const __int128 lhs = static_cast<__int128>(sched.horizon) * ts.processors;
    const __int128 rhs = static_cast<__int128>(len) * ts.processors + total;
    return lhs <= rhs;
}

// Trace rows behind Gantt-style plots.
inline std::string trace_csv(const TaskSet& ts, const DependencyGraph& g,
                             const MultiprocSchedule& sched) {
    (void)ts;
    std::ostringstream os;
    os << "processor,start,end,task,occurrence,segment,resource\n";
    for (const ExecSlice& s : sched.slices) {
        const auto& vx = g.vertices[s.vertex];
        os << s.processor << "," << s.start << "," << s.end << "," << vx.task << ","
           << vx.occurrence << "," << vx.segment << ",";
        if (vx.resource) os << *vx.resource;
        os << "\n";
    }
    return os.str();
}

}  // namespace dgsched
