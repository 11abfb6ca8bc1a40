#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgsched/jobshop.hpp"
#include "dgsched/time.hpp"

namespace dgsched {

constexpr std::int64_t kNoDeadline = std::numeric_limits<std::int64_t>::max();

// Start-time assignment over the flat operation ids of an instance.
struct ShopSchedule {
    const JobShopInstance* instance{nullptr};
    std::vector<Time> start;
    std::int64_t objective{0};  // makespan, or signed max lateness
};

enum class DispatchRule { EarliestDeadlineFirst, MostWorkRemaining, LongestProcessingTime, FirstInFirstOut };

enum class SolveStatus { Optimal, Incumbent, Infeasible };

struct ExactLimits {
    std::uint64_t max_nodes{1'000'000};
    double max_seconds{60.0};
};

struct ExactResult {
    SolveStatus status{SolveStatus::Incumbent};
    ShopSchedule schedule;
    std::uint64_t nodes{0};
};

namespace shop_detail {

struct Arc {
    std::uint32_t from;
    std::uint32_t to;
    Time weight;
};

// Conjunctive arcs shared by every evaluation: job chains (with gaps) and
// occurrence chaining between jobs of the same task.
struct StaticArcs {
    std::vector<Arc> arcs;
    std::vector<Time> release;     // per op: its job's release
    std::vector<Time> processing;  // per op
    std::vector<std::uint32_t> machine_of;
    std::vector<std::uint32_t> job_of;
    std::vector<std::uint32_t> last_op_of_job;   // flat id, or UINT32_MAX if job empty
    std::size_t count{0};

    StaticArcs(const JobShopInstance& inst, const OpIndexer& ix) {
        count = ix.count;
        release.resize(count);
        processing.resize(count);
        machine_of.resize(count);
        job_of.resize(count);
        last_op_of_job.assign(inst.jobs.size(), UINT32_MAX);
        for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
            const ShopJob& job = inst.jobs[j];
            for (std::size_t p = 0; p < job.operations.size(); ++p) {
                const std::size_t id = ix.id(j, p);
                release[id] = job.release;
                processing[id] = job.operations[p].processing;
                machine_of[id] = job.operations[p].machine;
                job_of[id] = static_cast<std::uint32_t>(j);
                if (p > 0)
                    arcs.push_back({static_cast<std::uint32_t>(id - 1),
                                    static_cast<std::uint32_t>(id),
                                    checked_add(job.operations[p - 1].processing,
                                                job.operations[p].min_gap_after_prev)});
            }
            if (!job.operations.empty())
                last_op_of_job[j] = static_cast<std::uint32_t>(ix.id(j, job.operations.size() - 1));
        }
        for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
            const ShopJob& job = inst.jobs[j];
            if (!job.prev_job || job.operations.empty()) continue;
            const std::uint32_t prev_last = last_op_of_job[*job.prev_job];
            if (prev_last == UINT32_MAX) continue;
            arcs.push_back({prev_last, static_cast<std::uint32_t>(ix.id(j, 0)),
                            processing[prev_last]});
        }
    }
};

struct EvalResult {
    bool feasible{false};
    std::vector<Time> start;
    std::int64_t objective{0};
};

// Longest-path earliest starts over static + extra arcs. Infeasible when the
// combined graph has a cycle.
inline EvalResult evaluate_arcs(const JobShopInstance& inst, const OpIndexer& ix,
                                const StaticArcs& sa, const std::vector<Arc>& extra) {
    EvalResult res;
    const std::size_t n = sa.count;
    std::vector<std::vector<std::pair<std::uint32_t, Time>>> out(n);
    std::vector<std::uint32_t> indeg(n, 0);
    auto add = [&](const Arc& a) {
        out[a.from].push_back({a.to, a.weight});
        ++indeg[a.to];
    };
    for (const Arc& a : sa.arcs) add(a);
    for (const Arc& a : extra) add(a);

    std::vector<Time> est(n);
    for (std::size_t i = 0; i < n; ++i) est[i] = sa.release[i];

    std::vector<std::uint32_t> stack;
    stack.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) stack.push_back(static_cast<std::uint32_t>(i));
    std::size_t seen = 0;
    while (!stack.empty()) {
        const std::uint32_t v = stack.back();
        stack.pop_back();
        ++seen;
        for (const auto& [w, wt] : out[v]) {
            est[w] = std::max(est[w], checked_add(est[v], wt));
            if (--indeg[w] == 0) stack.push_back(w);
        }
    }
    if (seen != n) return res;  // cycle

    res.feasible = true;
    res.start = std::move(est);

    std::int64_t obj = inst.objective == ShopObjective::Makespan
                           ? 0
                           : std::numeric_limits<std::int64_t>::min();
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        const ShopJob& job = inst.jobs[j];
        Time completion = job.release;
        if (!job.operations.empty()) {
            const std::size_t last = ix.id(j, job.operations.size() - 1);
            completion = checked_add(res.start[last], sa.processing[last]);
        }
        const Time finish = checked_add(completion, job.tail);
        if (inst.objective == ShopObjective::Makespan) {
            obj = std::max<std::int64_t>(obj, finish);
        } else {
            if (!job.abs_deadline)
                throw std::logic_error("max-lateness objective requires deadlines");
            obj = std::max<std::int64_t>(obj, finish - *job.abs_deadline);
        }
    }
    if (inst.jobs.empty()) obj = 0;
    res.objective = obj;
    return res;
}

// Machine sequences -> arcs between consecutive ops on each machine.
inline std::vector<Arc> sequence_arcs(const StaticArcs& sa,
                                      const std::vector<std::vector<std::uint32_t>>& seq) {
    std::vector<Arc> arcs;
    for (const auto& ops : seq)
        for (std::size_t k = 0; k + 1 < ops.size(); ++k)
            arcs.push_back({ops[k], ops[k + 1], sa.processing[ops[k]]});
    return arcs;
}

inline std::vector<std::vector<std::uint32_t>> sequences_from_starts(
    const JobShopInstance& inst, const OpIndexer& ix, const StaticArcs& sa,
    const std::vector<Time>& start) {
    std::vector<std::vector<std::uint32_t>> seq(inst.machines);
    for (std::uint32_t id = 0; id < sa.count; ++id)
        seq[sa.machine_of[id]].push_back(id);
    for (auto& ops : seq)
        std::sort(ops.begin(), ops.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (start[a] != start[b]) return start[a] < start[b];
            return a < b;
        });
    (void)ix;
    return seq;
}

}  // namespace shop_detail

// Objective of a given start assignment (makespan includes job tails;
// lateness may be negative).
inline std::int64_t objective(const JobShopInstance& inst, const std::vector<Time>& start) {
    const OpIndexer ix(inst);
    std::int64_t obj = inst.objective == ShopObjective::Makespan
                           ? 0
                           : std::numeric_limits<std::int64_t>::min();
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        const ShopJob& job = inst.jobs[j];
        Time completion = job.release;
        if (!job.operations.empty()) {
            const std::size_t last = ix.id(j, job.operations.size() - 1);
            completion = checked_add(start[last], job.operations.back().processing);
        }
        const Time finish = checked_add(completion, job.tail);
        if (inst.objective == ShopObjective::Makespan) {
            obj = std::max<std::int64_t>(obj, finish);
        } else {
            if (!job.abs_deadline)
                throw std::logic_error("max-lateness objective requires deadlines");
            obj = std::max<std::int64_t>(obj, finish - *job.abs_deadline);
        }
    }
    if (inst.jobs.empty()) obj = 0;
    return obj;
}

inline std::int64_t objective(const ShopSchedule& s) {
    return objective(*s.instance, s.start);
}

// Checks chain order, gaps, releases, job chaining and machine exclusivity.
inline bool is_feasible(const JobShopInstance& inst, const std::vector<Time>& start) {
    const OpIndexer ix(inst);
    if (start.size() != ix.count) return false;
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        const ShopJob& job = inst.jobs[j];
        for (std::size_t p = 0; p < job.operations.size(); ++p) {
            const std::size_t id = ix.id(j, p);
            if (start[id] < job.release) return false;
            if (p > 0) {
                const std::size_t prev = ix.id(j, p - 1);
                const Time min_start = checked_add(
                    checked_add(start[prev], job.operations[p - 1].processing),
                    job.operations[p].min_gap_after_prev);
                if (start[id] < min_start) return false;
            }
        }
        if (job.prev_job && !job.operations.empty()) {
            const ShopJob& prev = inst.jobs[*job.prev_job];
            if (!prev.operations.empty()) {
                const std::size_t prev_last = ix.id(*job.prev_job, prev.operations.size() - 1);
                if (start[ix.id(j, 0)] <
                    checked_add(start[prev_last], prev.operations.back().processing))
                    return false;
            }
        }
    }
    // machine exclusivity over half-open intervals
    std::vector<std::vector<std::pair<Time, Time>>> per_machine(inst.machines);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j)
        for (std::size_t p = 0; p < inst.jobs[j].operations.size(); ++p) {
            const ShopOperation& op = inst.jobs[j].operations[p];
            const Time s = start[ix.id(j, p)];
            per_machine[op.machine].push_back({s, checked_add(s, op.processing)});
        }
    for (auto& iv : per_machine) {
        std::sort(iv.begin(), iv.end());
        for (std::size_t k = 0; k + 1 < iv.size(); ++k)
            if (iv[k + 1].first < iv[k].second) return false;
    }
    return true;
}

// Non-preemptive serial dispatch; always yields a feasible non-delay
// schedule. Deterministic: ties fall back to (job, position).
inline ShopSchedule solve_dispatch(const JobShopInstance& inst, DispatchRule rule,
                                   std::uint64_t /*rng_seed*/ = 0) {
    validate_instance(inst);
    const OpIndexer ix(inst);
    const shop_detail::StaticArcs sa(inst, ix);

    std::vector<Time> remaining_work(inst.jobs.size(), 0);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j)
        for (const ShopOperation& op : inst.jobs[j].operations)
            remaining_work[j] = checked_add(remaining_work[j], op.processing);

    // next unscheduled position per job and the time it becomes dispatchable;
    // a job chained behind an unfinished predecessor is blocked until the
    // predecessor's completion event
    constexpr Time kBlocked = std::numeric_limits<Time>::max();
    std::vector<std::size_t> next_pos(inst.jobs.size(), 0);
    std::vector<Time> op_ready(inst.jobs.size());
    std::vector<Time> job_done_at(inst.jobs.size(), kBlocked);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        Time r = inst.jobs[j].release;
        if (inst.jobs[j].prev_job) {
            const Time prev_done = job_done_at[*inst.jobs[j].prev_job];
            r = prev_done == kBlocked ? kBlocked : std::max(r, prev_done);
        }
        op_ready[j] = r;
        if (inst.jobs[j].operations.empty()) job_done_at[j] = r;
    }
    // unblocking cascade on job completion (empty successors resolve through)
    std::function<void(std::size_t, Time)> resolve_completion = [&](std::size_t j, Time end) {
        job_done_at[j] = end;
        for (std::size_t k = j + 1; k < inst.jobs.size(); ++k) {
            if (!inst.jobs[k].prev_job || *inst.jobs[k].prev_job != j) continue;
            const Time r = std::max(inst.jobs[k].release, end);
            if (inst.jobs[k].operations.empty()) {
                resolve_completion(k, r);
            } else if (next_pos[k] == 0) {
                op_ready[k] = r;
            }
        }
    };

    std::vector<Time> machine_free(inst.machines, 0);
    std::vector<Time> start(ix.count, 0);
    std::size_t unscheduled = ix.count;

    auto key_of = [&](std::size_t j) -> std::int64_t {
        const ShopOperation& op = inst.jobs[j].operations[next_pos[j]];
        switch (rule) {
            case DispatchRule::EarliestDeadlineFirst:
                return inst.jobs[j].abs_deadline ? *inst.jobs[j].abs_deadline : kNoDeadline;
            case DispatchRule::MostWorkRemaining:
                return -remaining_work[j];
            case DispatchRule::LongestProcessingTime:
                return -op.processing;
            case DispatchRule::FirstInFirstOut:
                return op_ready[j];
        }
        return 0;
    };

    Time t = 0;
    while (unscheduled > 0) {
        bool scheduled_any = true;
        while (scheduled_any) {
            scheduled_any = false;
            for (std::uint32_t m = 0; m < inst.machines; ++m) {
                if (machine_free[m] > t) continue;
                std::size_t best = SIZE_MAX;
                std::int64_t best_key = 0;
                for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
                    if (next_pos[j] >= inst.jobs[j].operations.size()) continue;
                    const ShopOperation& op = inst.jobs[j].operations[next_pos[j]];
                    if (op.machine != m || op_ready[j] > t) continue;
                    const std::int64_t k = key_of(j);
                    // scan order is ascending job index, so ties keep the
                    // lowest (job, position)
                    if (best == SIZE_MAX || k < best_key) {
                        best = j;
                        best_key = k;
                    }
                }
                if (best == SIZE_MAX) continue;
                const std::size_t p = next_pos[best];
                const ShopOperation& op = inst.jobs[best].operations[p];
                const std::size_t id = ix.id(best, p);
                start[id] = t;
                const Time end = checked_add(t, op.processing);
                machine_free[m] = end;
                remaining_work[best] -= op.processing;
                ++next_pos[best];
                --unscheduled;
                if (next_pos[best] < inst.jobs[best].operations.size()) {
                    op_ready[best] = checked_add(
                        end, inst.jobs[best].operations[next_pos[best]].min_gap_after_prev);
                } else {
                    resolve_completion(best, end);
                }
                scheduled_any = true;
            }
        }
        if (unscheduled == 0) break;
        // advance to the next completion or readiness event
        Time nt = std::numeric_limits<Time>::max();
        for (std::uint32_t m = 0; m < inst.machines; ++m)
            if (machine_free[m] > t) nt = std::min(nt, machine_free[m]);
        for (std::size_t j = 0; j < inst.jobs.size(); ++j)
            if (next_pos[j] < inst.jobs[j].operations.size() && op_ready[j] > t &&
                op_ready[j] != kBlocked)
                nt = std::min(nt, op_ready[j]);
        if (nt == std::numeric_limits<Time>::max())
            throw std::logic_error("dispatch stalled");
        t = nt;
    }

    ShopSchedule s;
    s.instance = &inst;
    s.start = std::move(start);
    s.objective = objective(inst, s.start);
    return s;
}

// Adjacent-swap local search on the objective-defining path. Counts one
// iteration per neighbour evaluation; random kicks escape local optima while
// the best schedule found is retained.
inline ShopSchedule improve_local_search(const JobShopInstance& inst, const ShopSchedule& input,
                                         std::uint64_t budget, std::uint64_t rng_seed = 0) {
    validate_instance(inst);
    const OpIndexer ix(inst);
    const shop_detail::StaticArcs sa(inst, ix);
    std::mt19937_64 rng(rng_seed);

    auto seq = shop_detail::sequences_from_starts(inst, ix, sa, input.start);
    auto eval = [&](const std::vector<std::vector<std::uint32_t>>& s) {
        return shop_detail::evaluate_arcs(inst, ix, sa, shop_detail::sequence_arcs(sa, s));
    };
    auto cur = eval(seq);
    if (!cur.feasible)
        throw std::invalid_argument("local search requires a feasible input schedule");

    auto best_seq = seq;
    auto best = cur;

    // reconstruct the objective-defining path and collect adjacent
    // same-machine pairs along it
    auto critical_pairs = [&](const shop_detail::EvalResult& ev,
                              const std::vector<std::vector<std::uint32_t>>& s) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        // sink: op defining the objective
        std::int64_t worst = std::numeric_limits<std::int64_t>::min();
        std::uint32_t sink = UINT32_MAX;
        for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
            const ShopJob& job = inst.jobs[j];
            if (job.operations.empty()) continue;
            const std::size_t last = ix.id(j, job.operations.size() - 1);
            std::int64_t v = checked_add(checked_add(ev.start[last], sa.processing[last]), job.tail);
            if (inst.objective == ShopObjective::MaxLateness) v -= *job.abs_deadline;
            if (v > worst) { worst = v; sink = static_cast<std::uint32_t>(last); }
        }
        if (sink == UINT32_MAX) return pairs;

        std::vector<std::uint32_t> pos_in_seq(ix.count, 0);
        for (const auto& ops : s)
            for (std::uint32_t k = 0; k < ops.size(); ++k) pos_in_seq[ops[k]] = k;

        std::uint32_t v = sink;
        while (true) {
            // tight machine predecessor first, then chain predecessor
            const auto& ops = s[sa.machine_of[v]];
            std::uint32_t mpred = UINT32_MAX;
            if (pos_in_seq[v] > 0) mpred = ops[pos_in_seq[v] - 1];
            if (mpred != UINT32_MAX &&
                checked_add(ev.start[mpred], sa.processing[mpred]) == ev.start[v]) {
                pairs.push_back({mpred, v});
                v = mpred;
                continue;
            }
            std::uint32_t cpred = UINT32_MAX;
            Time need = 0;
            const std::uint32_t j = sa.job_of[v];
            const std::size_t p = v - ix.offset[j];
            if (p > 0) {
                cpred = v - 1;
                need = checked_add(sa.processing[cpred],
                                   inst.jobs[j].operations[p].min_gap_after_prev);
            } else if (inst.jobs[j].prev_job &&
                       sa.last_op_of_job[*inst.jobs[j].prev_job] != UINT32_MAX) {
                cpred = sa.last_op_of_job[*inst.jobs[j].prev_job];
                need = sa.processing[cpred];
            }
            if (cpred != UINT32_MAX && checked_add(ev.start[cpred], need) == ev.start[v]) {
                v = cpred;
                continue;
            }
            break;  // released at its lower bound
        }
        return pairs;
    };

    std::uint64_t used = 0;
    while (used < budget) {
        auto pairs = critical_pairs(cur, seq);
        std::int64_t best_delta = 0;
        std::ptrdiff_t best_move = -1;
        shop_detail::EvalResult best_eval;
        std::vector<std::vector<std::uint32_t>> cand;
        for (std::size_t k = 0; k < pairs.size() && used < budget; ++k) {
            const auto [a, b] = pairs[k];
            if (sa.job_of[a] == sa.job_of[b]) continue;  // chain-ordered, not swappable
            cand = seq;
            auto& ops = cand[sa.machine_of[a]];
            const auto ia = std::find(ops.begin(), ops.end(), a);
            const auto ib = std::find(ops.begin(), ops.end(), b);
            std::iter_swap(ia, ib);
            ++used;
            auto ev = eval(cand);
            if (!ev.feasible) continue;
            const std::int64_t delta = ev.objective - cur.objective;
            if (delta < best_delta) {
                best_delta = delta;
                best_move = static_cast<std::ptrdiff_t>(k);
                best_eval = std::move(ev);
            }
        }
        if (best_move >= 0) {
            const auto [a, b] = pairs[static_cast<std::size_t>(best_move)];
            auto& ops = seq[sa.machine_of[a]];
            const auto ia = std::find(ops.begin(), ops.end(), a);
            const auto ib = std::find(ops.begin(), ops.end(), b);
            std::iter_swap(ia, ib);
            cur = std::move(best_eval);
            if (cur.objective < best.objective) {
                best = cur;
                best_seq = seq;
            }
            continue;
        }
        if (used >= budget) break;
        // local optimum: random adjacent kick, keeping the best snapshot
        std::vector<std::uint32_t> kickable;
        for (std::uint32_t m = 0; m < inst.machines; ++m)
            if (seq[m].size() >= 2) kickable.push_back(m);
        if (kickable.empty()) break;
        bool kicked = false;
        for (int attempt = 0; attempt < 16 && used < budget && !kicked; ++attempt) {
            const std::uint32_t m = kickable[rng() % kickable.size()];
            const std::size_t k = rng() % (seq[m].size() - 1);
            if (sa.job_of[seq[m][k]] == sa.job_of[seq[m][k + 1]]) continue;
            auto cand2 = seq;
            std::swap(cand2[m][k], cand2[m][k + 1]);
            ++used;
            auto ev = eval(cand2);
            if (!ev.feasible) continue;
            seq = std::move(cand2);
            cur = std::move(ev);
            kicked = true;
        }
        if (!kicked) break;
    }

    auto fin = eval(best_seq);
    ShopSchedule out;
    out.instance = &inst;
    out.start = std::move(fin.start);
    out.objective = fin.objective;
    // monotonicity contract: never worse than the input
    if (out.objective > input.objective) {
        out.start = input.start;
        out.objective = input.objective;
    }
    return out;
}

// Disjunctive machinery for the exact solver; also exportable as DOT for
// debugging.
struct DisjunctiveGraph {
    enum Orientation : std::uint8_t { Unset = 0, Forward = 1, Backward = 2 };
    struct Pair {
        std::uint32_t a;
        std::uint32_t b;
        std::uint32_t machine;
    };
    std::vector<Pair> pairs;
    std::vector<Orientation> orientation;

    DisjunctiveGraph(const JobShopInstance& inst, const shop_detail::StaticArcs& sa) {
        std::vector<std::vector<std::uint32_t>> per_machine(inst.machines);
        for (std::uint32_t id = 0; id < sa.count; ++id)
            per_machine[sa.machine_of[id]].push_back(id);
        for (std::uint32_t m = 0; m < inst.machines; ++m)
            for (std::size_t x = 0; x < per_machine[m].size(); ++x)
                for (std::size_t y = x + 1; y < per_machine[m].size(); ++y) {
                    const std::uint32_t a = per_machine[m][x];
                    const std::uint32_t b = per_machine[m][y];
                    if (sa.job_of[a] == sa.job_of[b]) continue;  // chain already orders them
                    pairs.push_back({a, b, m});
                }
        orientation.assign(pairs.size(), Unset);
    }
};

namespace shop_detail {

struct BnbContext {
    const JobShopInstance& inst;
    const OpIndexer& ix;
    const StaticArcs& sa;
    DisjunctiveGraph& dg;
    ExactLimits limits;
    std::chrono::steady_clock::time_point t0;
    std::uint64_t nodes{0};
    bool aborted{false};
    std::int64_t best_obj;
    std::vector<Time> best_start;
    std::vector<std::int64_t> machine_bound;  // static per-machine lower bounds
};

inline std::vector<Arc> oriented_arcs(const BnbContext& c) {
    std::vector<Arc> arcs;
    arcs.reserve(c.dg.pairs.size());
    for (std::size_t k = 0; k < c.dg.pairs.size(); ++k) {
        const auto& pr = c.dg.pairs[k];
        if (c.dg.orientation[k] == DisjunctiveGraph::Forward)
            arcs.push_back({pr.a, pr.b, c.sa.processing[pr.a]});
        else if (c.dg.orientation[k] == DisjunctiveGraph::Backward)
            arcs.push_back({pr.b, pr.a, c.sa.processing[pr.b]});
    }
    return arcs;
}

// static heads/tails for the workload bound
inline std::vector<std::int64_t> machine_bounds(const JobShopInstance& inst, const OpIndexer& ix,
                                                const StaticArcs& sa) {
    const std::size_t n = sa.count;
    std::vector<Time> head(n, 0), tail(n, 0);
    std::vector<std::int64_t> dl_tail(n, 0);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        const ShopJob& job = inst.jobs[j];
        Time h = job.release;
        for (std::size_t p = 0; p < job.operations.size(); ++p) {
            if (p > 0)
                h = checked_add(h, checked_add(job.operations[p - 1].processing,
                                               job.operations[p].min_gap_after_prev));
            head[ix.id(j, p)] = h;
        }
        Time t = job.tail;
        for (std::size_t p = job.operations.size(); p-- > 0;) {
            tail[ix.id(j, p)] = t;
            dl_tail[ix.id(j, p)] =
                inst.objective == ShopObjective::MaxLateness ? t - *job.abs_deadline : t;
            t = checked_add(t, job.operations[p].processing);
            if (p > 0) t = checked_add(t, job.operations[p].min_gap_after_prev);
        }
    }
    std::vector<std::int64_t> bound(inst.machines, std::numeric_limits<std::int64_t>::min());
    std::vector<Time> work(inst.machines, 0);
    std::vector<Time> min_head(inst.machines, std::numeric_limits<Time>::max());
    std::vector<std::int64_t> min_tail(inst.machines, std::numeric_limits<std::int64_t>::max());
    for (std::uint32_t id = 0; id < n; ++id) {
        const std::uint32_t m = sa.machine_of[id];
        work[m] = checked_add(work[m], sa.processing[id]);
        min_head[m] = std::min(min_head[m], head[id]);
        min_tail[m] = std::min(min_tail[m], dl_tail[id]);
    }
    for (std::uint32_t m = 0; m < inst.machines; ++m)
        if (work[m] > 0)
            bound[m] = min_head[m] + work[m] + min_tail[m];
    return bound;
}

inline void bnb_rec(BnbContext& c) {
    if (c.aborted) return;
    if (++c.nodes > c.limits.max_nodes) { c.aborted = true; return; }
    if ((c.nodes & 0xFF) == 0) {
        const double el = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - c.t0).count();
        if (el > c.limits.max_seconds) { c.aborted = true; return; }
    }

    auto ev = evaluate_arcs(c.inst, c.ix, c.sa, oriented_arcs(c));
    if (!ev.feasible) return;  // cyclic orientation

    std::int64_t lb = ev.objective;
    for (const std::int64_t mb : c.machine_bound)
        if (mb != std::numeric_limits<std::int64_t>::min()) lb = std::max(lb, mb);
    if (lb >= c.best_obj) return;

    // find an overlapping unset pair in the relaxed schedule
    std::size_t branch = SIZE_MAX;
    for (std::size_t k = 0; k < c.dg.pairs.size(); ++k) {
        if (c.dg.orientation[k] != DisjunctiveGraph::Unset) continue;
        const auto& pr = c.dg.pairs[k];
        const Time ea = ev.start[pr.a], eb = ev.start[pr.b];
        const bool overlap = ea < checked_add(eb, c.sa.processing[pr.b]) &&
                             eb < checked_add(ea, c.sa.processing[pr.a]);
        if (overlap) { branch = k; break; }
    }
    if (branch == SIZE_MAX) {
        // relaxed earliest starts already respect machine exclusivity
        c.best_obj = ev.objective;
        c.best_start = ev.start;
        return;
    }

    const auto& pr = c.dg.pairs[branch];
    const bool a_first = ev.start[pr.a] < ev.start[pr.b] ||
                         (ev.start[pr.a] == ev.start[pr.b] && pr.a < pr.b);
    const auto first = a_first ? DisjunctiveGraph::Forward : DisjunctiveGraph::Backward;
    const auto second = a_first ? DisjunctiveGraph::Backward : DisjunctiveGraph::Forward;
    c.dg.orientation[branch] = first;
    bnb_rec(c);
    if (!c.aborted) {
        c.dg.orientation[branch] = second;
        bnb_rec(c);
    }
    c.dg.orientation[branch] = DisjunctiveGraph::Unset;
}

}  // namespace shop_detail

// Branch and bound over disjunctive orientations. Optimal only when the
// search space was exhausted within the limits; otherwise the best incumbent
// is returned.
inline ExactResult solve_exact(const JobShopInstance& inst, ExactLimits limits = {}) {
    validate_instance(inst);
    const OpIndexer ix(inst);
    const shop_detail::StaticArcs sa(inst, ix);
    DisjunctiveGraph dg(inst, sa);

    shop_detail::BnbContext c{inst, ix, sa, dg, limits,
                              std::chrono::steady_clock::now(), 0, false, 0, {}, {}};
    c.machine_bound = shop_detail::machine_bounds(inst, ix, sa);

    // warm start keeps the incumbent meaningful when limits are tiny
    const ShopSchedule warm = solve_dispatch(
        inst, inst.objective == ShopObjective::MaxLateness
                  ? DispatchRule::EarliestDeadlineFirst
                  : DispatchRule::MostWorkRemaining);
    c.best_obj = warm.objective;
    c.best_start = warm.start;

    shop_detail::bnb_rec(c);

    ExactResult res;
    res.status = c.aborted ? SolveStatus::Incumbent : SolveStatus::Optimal;
    res.nodes = c.nodes;
    res.schedule.instance = &inst;
    res.schedule.start = std::move(c.best_start);
    res.schedule.objective = c.best_obj;
    return res;
}

inline std::string disjunctive_graph_dot(const JobShopInstance& inst) {
    const OpIndexer ix(inst);
    const shop_detail::StaticArcs sa(inst, ix);
    const DisjunctiveGraph dg(inst, sa);
    std::ostringstream os;
    os << "digraph shop {\n";
    for (std::uint32_t id = 0; id < sa.count; ++id)
        os << "  o" << id << " [label=\"j" << sa.job_of[id] << " m" << sa.machine_of[id]
           << " p" << sa.processing[id] << "\"];\n";
    for (const auto& a : sa.arcs)
        os << "  o" << a.from << " -> o" << a.to << ";\n";
    for (const auto& p : dg.pairs)
        os << "  o" << p.a << " -> o" << p.b << " [dir=none, style=dashed, label=\"m"
           << p.machine << "\"];\n";
    os << "}\n";
    return os.str();
}

}  // namespace dgsched
