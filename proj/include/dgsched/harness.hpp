#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "dgsched/depgraph.hpp"
#include "dgsched/generator.hpp"
#include "dgsched/jobshop.hpp"
#include "dgsched/scheduler.hpp"
#include "dgsched/solver.hpp"
#include "dgsched/task_model.hpp"

namespace dgsched {

enum class ReductionKind { FrameBased, WithDelays, Periodic };
enum class Policy { ListEdf, PartitionedEdf };

struct SolverChoice {
    enum Kind { Dispatch, LocalSearch, Exact } kind{LocalSearch};
    DispatchRule rule{DispatchRule::MostWorkRemaining};
    std::uint64_t budget{2000};  // local search neighbour evaluations
    ExactLimits limits{};
    std::uint64_t seed{0};
};

struct PipelineOptions {
    ReductionKind reduction{ReductionKind::FrameBased};
    SolverChoice solver{};
    Policy policy{Policy::ListEdf};
    CsMode cs_mode{CsMode::PreemptiveCS};
};

class pipeline_error : public std::runtime_error {
public:
    pipeline_error(std::string stage_, const std::string& msg)
        : std::runtime_error("[" + stage_ + "] " + msg), stage(std::move(stage_)) {}
    std::string stage;
};

enum class RowSolverStatus { Optimal, Incumbent, Heuristic };

struct ResultRow {
    bool schedulable{false};
    std::int64_t objective_value{0};  // makespan (frame) or max lateness (periodic)
    Time len_g{0};
    Rational workload_bound{0};       // total work / M
    Time chain_bound{0};              // longest task chain incl. releases
    std::int64_t shop_objective{0};
    RowSolverStatus solver_status{RowSolverStatus::Heuristic};
    double wall_seconds{0.0};
};

struct PipelineResult {
    ResultRow row;
    JobShopInstance instance;
    ShopSchedule shop_schedule;
    DependencyGraph graph;
    SubJobDeadlines deadlines;
    MultiprocSchedule schedule;
};

inline std::string variant_name(const PipelineOptions& o) {
    std::string s = "JS-";
    s += o.policy == Policy::ListEdf ? "LEDF" : "PEDF";
    s += o.cs_mode == CsMode::PreemptiveCS ? "-P" : "-NP";
    return s;
}

// generate -> reduce -> solve -> graph -> simulate -> verdict
inline PipelineResult run_pipeline(const TaskSet& ts, const PipelineOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult pr;

    if (!is_valid(ts)) throw pipeline_error("validate", "task set violates model invariants");

    try {
        switch (options.reduction) {
            case ReductionKind::FrameBased: pr.instance = reduce_frame_based(ts); break;
            case ReductionKind::WithDelays: pr.instance = reduce_with_delays(ts); break;
            case ReductionKind::Periodic: pr.instance = reduce_periodic(ts); break;
        }
    } catch (const std::exception& e) {
        throw pipeline_error("reduce", e.what());
    }

    try {
        switch (options.solver.kind) {
            case SolverChoice::Dispatch:
                pr.shop_schedule =
                    solve_dispatch(pr.instance, options.solver.rule, options.solver.seed);
                pr.row.solver_status = RowSolverStatus::Heuristic;
                break;
            case SolverChoice::LocalSearch: {
                const ShopSchedule d =
                    solve_dispatch(pr.instance, options.solver.rule, options.solver.seed);
                pr.shop_schedule = improve_local_search(pr.instance, d, options.solver.budget,
                                                        options.solver.seed);
                pr.row.solver_status = RowSolverStatus::Heuristic;
                break;
            }
            case SolverChoice::Exact: {
                const ExactResult er = solve_exact(pr.instance, options.solver.limits);
                pr.shop_schedule = er.schedule;
                pr.row.solver_status = er.status == SolveStatus::Optimal
                                           ? RowSolverStatus::Optimal
                                           : RowSolverStatus::Incumbent;
                break;
            }
        }
    } catch (const std::exception& e) {
        throw pipeline_error("solve", e.what());
    }
    pr.row.shop_objective = pr.shop_schedule.objective;

    try {
        pr.graph = build_from_schedule(ts, pr.instance, pr.shop_schedule);
        pr.row.len_g = critical_path_length(pr.graph);
    } catch (const std::exception& e) {
        throw pipeline_error("graph", e.what());
    }

    try {
        pr.deadlines = assign_subjob_deadlines(ts, pr.graph);
        pr.schedule = options.policy == Policy::ListEdf
                          ? list_edf(ts, pr.graph, pr.deadlines, options.cs_mode)
                          : p_edf(ts, pr.graph, pr.deadlines, options.cs_mode);
    } catch (const std::exception& e) {
        throw pipeline_error("schedule", e.what());
    }

    const Verdict verdict = check_schedulability(ts, pr.graph, pr.schedule);
    pr.row.schedulable = verdict.schedulable;
    pr.row.objective_value = ts.release_model == ReleaseModel::FrameBased
                                 ? makespan(ts, pr.schedule)
                                 : max_lateness(ts, pr.graph, pr.schedule);

    // lower bound ingredients
    Time total = 0;
    for (const Task& t : ts.tasks) {
        Time mult = 1;
        if (ts.release_model == ReleaseModel::PeriodicSynchronous)
            mult = hyperperiod(ts) / t.period;
        total = checked_add(total, checked_mul(t.total_wcet(), mult));
    }
    pr.row.workload_bound = Rational(total, ts.processors);
    Time chain = 0;
    for (const Task& t : ts.tasks) chain = std::max(chain, t.total_wcet());
    pr.row.chain_bound = chain;

    // proven list-scheduling inequality; a violation is a simulator bug
    if (ts.release_model == ReleaseModel::FrameBased &&
        options.policy == Policy::ListEdf &&
        !graham_bound_holds(ts, pr.graph, pr.schedule))
        throw pipeline_error("schedule", "list schedule exceeded the graph+workload bound");

    pr.row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return pr;
}

// Best lower bound available from a result row (exact workload average vs
// critical path of the optimal shop order when the solver proved optimality).
inline bool lower_bound_holds(const ResultRow& row, std::int64_t value) {
    // value >= workload_bound, compared exactly
    const __int128 lhs = static_cast<__int128>(value) * row.workload_bound.den;
    if (lhs < static_cast<__int128>(row.workload_bound.num)) return false;
    if (row.solver_status == RowSolverStatus::Optimal && value < row.shop_objective)
        return false;
    return value >= row.chain_bound;
}

// ---- acceptance sweep -------------------------------------------------------

struct SweepConfig {
    GenConfig gen;
    std::vector<double> levels;  // fractions of M, e.g. 0.0 .. 1.0
    std::uint32_t replicates{100};
    PipelineOptions options;
    std::uint64_t master_seed{1};
    std::uint32_t workers{1};
};

struct SweepRow {
    double level;
    std::string variant;
    std::uint32_t accepted{0};
    std::uint32_t total{0};

    double ratio() const { return total ? static_cast<double>(accepted) / total : 0.0; }
};

inline std::uint64_t replicate_seed(std::uint64_t master, std::uint32_t replicate) {
    // splitmix64 step over (master, replicate)
    std::uint64_t x = master + 0x9e3779b97f4a7c15ULL * (replicate + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Fraction of schedulable replicates per level. Deterministic for a fixed
// master seed: jobs are merged by (level, replicate) regardless of worker
// completion order.
inline std::vector<SweepRow> acceptance_sweep(const SweepConfig& cfg) {
    struct Job {
        std::size_t level_index;
        std::uint32_t replicate;
    };
    std::vector<Job> jobs;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li)
        for (std::uint32_t r = 0; r < cfg.replicates; ++r) jobs.push_back({li, r});

    std::vector<std::uint8_t> ok(jobs.size(), 0);
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors;
    std::mutex err_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) break;
            const Job& job = jobs[k];
            GenConfig g = cfg.gen;
            g.utilization_fraction = cfg.levels[job.level_index];
            g.seed = replicate_seed(cfg.master_seed, job.replicate);
            try {
                const TaskSet ts = generate_taskset(g);
                PipelineOptions opt = cfg.options;
                opt.solver.seed = g.seed;
                const PipelineResult pr = run_pipeline(ts, opt);
                ok[k] = pr.row.schedulable ? 1 : 0;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                errors.push_back(e.what());
            }
        }
    };

    const std::uint32_t nw = std::max<std::uint32_t>(1, cfg.workers);
    std::vector<std::thread> pool;
    for (std::uint32_t w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();

    if (!errors.empty())
        throw pipeline_error("sweep", errors.front());

    std::vector<SweepRow> rows;
    const std::string variant = variant_name(cfg.options);
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        SweepRow row{cfg.levels[li], variant, 0, cfg.replicates};
        for (std::uint32_t r = 0; r < cfg.replicates; ++r)
            if (ok[li * cfg.replicates + r]) ++row.accepted;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string results_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "level,variant,accepted,total,ratio\n";
    os << std::fixed << std::setprecision(6);
    for (const SweepRow& r : rows)
        os << r.level << "," << r.variant << "," << r.accepted << "," << r.total << ","
           << r.ratio() << "\n";
    return os.str();
}

inline nlohmann::json sweep_manifest(const SweepConfig& cfg) {
    return {{"master_seed", cfg.master_seed},
            {"replicates", cfg.replicates},
            {"levels", cfg.levels},
            {"variant", variant_name(cfg.options)},
            {"generator",
             {{"processors", cfg.gen.processors},
              {"resources", cfg.gen.resources},
              {"tasks_per_set", cfg.gen.tasks_per_set},
              {"per_task_cap", cfg.gen.per_task_cap},
              {"h_min", cfg.gen.h_min},
              {"h_max", cfg.gen.h_max},
              {"accesses_min", cfg.gen.accesses_min},
              {"accesses_max", cfg.gen.accesses_max},
              {"release_model",
               cfg.gen.release_model == ReleaseModel::FrameBased ? "frame" : "periodic"},
              {"resolution_denominator", cfg.gen.resolution}}},
            {"solver",
             {{"kind", cfg.options.solver.kind == SolverChoice::Dispatch     ? "dispatch"
                       : cfg.options.solver.kind == SolverChoice::LocalSearch ? "local_search"
                                                                              : "exact"},
              {"budget", cfg.options.solver.budget}}},
            {"git_revision", "unknown"}};
}

}  // namespace dgsched
