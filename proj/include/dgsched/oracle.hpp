#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "dgsched/jobshop.hpp"
#include "dgsched/solver.hpp"
#include "dgsched/task_model.hpp"

namespace dgsched {

// Minimum objective over all per-machine operation permutations, each
// evaluated by longest-path earliest starts. Exact and exhaustive; guarded
// to stay enumerable.
inline std::int64_t optimal_shop_bruteforce(const JobShopInstance& inst) {
    if (inst.jobs.size() > 3 || inst.total_operations() > 8)
        throw std::invalid_argument("optimal_shop_bruteforce: instance exceeds the size guard");
    validate_instance(inst);
    const OpIndexer ix(inst);
    const shop_detail::StaticArcs sa(inst, ix);

    std::vector<std::vector<std::uint32_t>> per_machine(inst.machines);
    for (std::uint32_t id = 0; id < sa.count; ++id)
        per_machine[sa.machine_of[id]].push_back(id);
    for (auto& ops : per_machine) std::sort(ops.begin(), ops.end());

    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    std::vector<std::vector<std::uint32_t>> seq = per_machine;

    // odometer over per-machine permutations
    std::function<void(std::size_t)> rec = [&](std::size_t m) {
        if (m == seq.size()) {
            const auto ev =
                shop_detail::evaluate_arcs(inst, ix, sa, shop_detail::sequence_arcs(sa, seq));
            if (ev.feasible) best = std::min(best, ev.objective);
            return;
        }
        std::vector<std::uint32_t>& ops = seq[m];
        std::sort(ops.begin(), ops.end());
        do {
            rec(m + 1);
        } while (std::next_permutation(ops.begin(), ops.end()));
    };
    rec(0);

    if (best == std::numeric_limits<std::int64_t>::max())
        throw std::logic_error("optimal_shop_bruteforce: no feasible permutation");
    return best;
}

namespace oracle_detail {

struct MmssState {
    Time t{0};
    std::vector<std::uint32_t> next_seg;  // per task
    std::vector<Time> ready_at;           // per task: completion of its last finished segment
    // running segments: (task, finish time)
    std::vector<std::pair<std::uint32_t, Time>> running;
};

struct MmssContext {
    const TaskSet& ts;
    Time best;
    std::vector<Time> chain_suffix_start;  // per (task, seg): remaining chain length from seg
    std::vector<std::size_t> seg_offset;

    Time suffix(std::uint32_t task, std::uint32_t seg) const {
        return chain_suffix_start[seg_offset[task] + seg];
    }
};

inline void mmss_rec(MmssContext& c, MmssState& st, std::uint32_t min_start_vertex);

// advance to the earliest running completion
inline void mmss_advance(MmssContext& c, MmssState& st) {
    Time nt = std::numeric_limits<Time>::max();
    for (const auto& [task, fin] : st.running) nt = std::min(nt, fin);
    MmssState next = st;
    next.t = nt;
    next.running.clear();
    for (const auto& [task, fin] : st.running) {
        if (fin == nt) {
            next.ready_at[task] = fin;
        } else {
            next.running.push_back({task, fin});
        }
    }
    mmss_rec(c, next, 0);
}

inline void mmss_rec(MmssContext& c, MmssState& st, std::uint32_t min_start_task) {
    // completion check
    bool all_done = st.running.empty();
    for (std::size_t i = 0; all_done && i < c.ts.tasks.size(); ++i)
        if (st.next_seg[i] < c.ts.tasks[i].segments.size()) all_done = false;
    if (all_done) {
        c.best = std::min(c.best, st.t);
        return;
    }

    // lower bound: every unfinished chain still needs its suffix
    Time lb = st.t;
    for (const auto& [task, fin] : st.running) {
        Time rem = fin;
        if (st.next_seg[task] < c.ts.tasks[task].segments.size())
            rem = checked_add(fin, c.suffix(task, st.next_seg[task]));
        lb = std::max(lb, rem);
    }
    for (std::size_t i = 0; i < c.ts.tasks.size(); ++i) {
        bool running = false;
        for (const auto& [task, fin] : st.running)
            if (task == i) running = true;
        if (running) continue;
        if (st.next_seg[i] < c.ts.tasks[i].segments.size())
            lb = std::max(lb, checked_add(std::max(st.t, st.ready_at[i]),
                                          c.suffix(i, st.next_seg[i])));
    }
    if (lb >= c.best) return;

    const std::uint32_t m = c.ts.processors;
    const bool has_free = st.running.size() < m;

    // eligible next segments
    std::vector<std::uint32_t> eligible;
    if (has_free) {
        for (std::uint32_t i = min_start_task; i < c.ts.tasks.size(); ++i) {
            if (st.next_seg[i] >= c.ts.tasks[i].segments.size()) continue;
            if (st.ready_at[i] > st.t) continue;
            bool running = false;
            for (const auto& [task, fin] : st.running)
                if (task == i) running = true;
            if (running) continue;
            const Segment& seg = c.ts.tasks[i].segments[st.next_seg[i]];
            if (seg.is_critical()) {
                bool resource_busy = false;
                for (const auto& [task, fin] : st.running) {
                    const std::uint32_t ns = st.next_seg[task] - 1;
                    const Segment& rs = c.ts.tasks[task].segments[ns];
                    if (rs.is_critical() && *rs.resource == *seg.resource) resource_busy = true;
                }
                if (resource_busy) continue;
            }
            eligible.push_back(i);
        }
    }

    // branch: start one eligible segment (at the same instant), in ascending
    // task order to deduplicate permutations of one batch
    for (const std::uint32_t i : eligible) {
        MmssState next = st;
        const Segment& seg = c.ts.tasks[i].segments[next.next_seg[i]];
        next.running.push_back({i, checked_add(st.t, seg.wcet)});
        ++next.next_seg[i];
        mmss_rec(c, next, i + 1);
    }

    // branch: deliberate idling, advance to the next completion
    if (!st.running.empty()) mmss_advance(c, st);
}

}  // namespace oracle_detail

// Minimum makespan over all semi-partitioned schedules with non-preemptive
// segments, by exhaustive branching over dispatch decisions at event times
// (deliberate idling included). Exact for the segment-level model; guarded.
inline Time optimal_mmss_makespan_bruteforce(const TaskSet& ts) {
    detail::require_valid(ts, "optimal_mmss_makespan_bruteforce");
    if (ts.release_model != ReleaseModel::FrameBased)
        throw std::invalid_argument("optimal_mmss_makespan_bruteforce: frame-based sets only");
    std::size_t segments = 0;
    Time work = 0;
    for (const Task& t : ts.tasks) {
        segments += t.segments.size();
        work = checked_add(work, t.total_wcet());
    }
    if (ts.tasks.size() > 3 || segments > 10 || work > 200)
        throw std::invalid_argument("optimal_mmss_makespan_bruteforce: instance exceeds the size guard");

    oracle_detail::MmssContext c{ts, work, {}, {}};
    for (const Task& t : ts.tasks) {
        c.seg_offset.push_back(c.chain_suffix_start.size());
        Time suffix = 0;
        std::vector<Time> rev;
        for (std::size_t s = t.segments.size(); s-- > 0;) {
            suffix = checked_add(suffix, t.segments[s].wcet);
            rev.push_back(suffix);
        }
        std::reverse(rev.begin(), rev.end());
        for (Time v : rev) c.chain_suffix_start.push_back(v);
    }
    c.best = checked_add(work, 1);  // serial schedule is always feasible

    oracle_detail::MmssState st;
    st.next_seg.assign(ts.tasks.size(), 0);
    st.ready_at.assign(ts.tasks.size(), 0);
    oracle_detail::mmss_rec(c, st, 0);
    return std::min(c.best, work);
}

// ---- distributed corpus ----------------------------------------------------

struct OracleEntry {
    TaskSet ts;
    Time mmss_makespan{0};
    std::int64_t shop_makespan{0};
};

// Fixed seeded instances within the brute-force guards; D is placed around
// the optimal makespan so both verdicts appear in the corpus.
inline std::vector<OracleEntry> make_oracle_corpus(std::size_t count, std::uint64_t seed) {
    std::vector<OracleEntry> corpus;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_tasks(2, 3);
    std::uniform_int_distribution<int> n_res(1, 2);
    std::uniform_int_distribution<int> wcet(1, 4);
    std::uniform_int_distribution<int> m_procs(2, 3);
    std::uniform_int_distribution<int> jitter(-1, 2);

    while (corpus.size() < count) {
        TaskSet ts;
        ts.processors = m_procs(rng);
        ts.resources = n_res(rng);
        ts.release_model = ReleaseModel::FrameBased;
        ts.resolution = 1;

        const int n = n_tasks(rng);
        std::size_t total_segments = 0;
        for (int i = 0; i < n; ++i) {
            Task t;
            const int max_here =
                10 - static_cast<int>(total_segments) - (n - 1 - i);
            if (max_here < 1) break;
            std::uniform_int_distribution<int> n_segs(1, std::min(4, max_here));
            const int k = n_segs(rng);
            bool cs_turn = rng() & 1;
            for (int s = 0; s < k; ++s) {
                Segment seg;
                seg.wcet = wcet(rng);
                if (cs_turn)
                    seg.resource = static_cast<std::uint32_t>(rng() % ts.resources);
                // alternation permits consecutive critical sections
                cs_turn = cs_turn ? (rng() & 1) : true;
                t.segments.push_back(seg);
            }
            total_segments += t.segments.size();
            ts.tasks.push_back(std::move(t));
        }
        if (ts.tasks.empty()) continue;

        Time work = 0;
        for (const Task& t : ts.tasks) work = checked_add(work, t.total_wcet());
        for (Task& t : ts.tasks) {
            t.period = checked_add(work, 4);  // placeholder, tightened below
            t.deadline = t.period;
        }
        if (!is_valid(ts)) continue;

        OracleEntry entry;
        entry.mmss_makespan = optimal_mmss_makespan_bruteforce(ts);
        const JobShopInstance shop = reduce_frame_based(ts);
        if (shop.total_operations() > 8 || shop.jobs.size() > 3) continue;
        entry.shop_makespan = optimal_shop_bruteforce(shop);

        Time d = checked_add(entry.mmss_makespan, jitter(rng));
        d = std::max<Time>(d, 1);
        for (Task& t : ts.tasks) {
            t.deadline = d;
            t.period = d;
        }
        if (!is_valid(ts)) continue;
        entry.ts = std::move(ts);
        corpus.push_back(std::move(entry));
    }
    return corpus;
}

inline nlohmann::json corpus_to_json(const std::vector<OracleEntry>& corpus) {
    nlohmann::json out = nlohmann::json::array();
    for (const OracleEntry& e : corpus)
        out.push_back({{"taskset", to_json(e.ts)},
                       {"oracle_makespan", e.mmss_makespan},
                       {"oracle_shop_makespan", e.shop_makespan}});
    return {{"instances", out}};
}

inline std::vector<OracleEntry> corpus_from_json(const nlohmann::json& j) {
    std::vector<OracleEntry> corpus;
    for (const auto& je : j.at("instances")) {
        OracleEntry e;
        e.ts = taskset_from_json(je.at("taskset"));
        e.mmss_makespan = je.at("oracle_makespan").get<Time>();
        e.shop_makespan = je.at("oracle_shop_makespan").get<std::int64_t>();
        corpus.push_back(std::move(e));
    }
    return corpus;
}

}  // namespace dgsched
