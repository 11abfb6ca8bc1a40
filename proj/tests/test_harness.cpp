#include "doctest.h"

#include "dgsched/harness.hpp"
#include "dgsched/oracle.hpp"

#include "testutil.hpp"

using namespace dgsched;
using namespace testutil;

TEST_CASE("pipeline on an empty set reports schedulable with zero makespan") {
    TaskSet ts = frame_set({}, 2, 1);
    PipelineOptions opt;
    const PipelineResult pr = run_pipeline(ts, opt);
    CHECK(pr.row.schedulable);
    CHECK(pr.row.objective_value == 0);
}

TEST_CASE("pipeline verdict matches the frame-based deadline threshold") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const TaskSet ts = random_frame_set(seed);
        PipelineOptions opt;
        opt.cs_mode = CsMode::NonPreemptiveCS;
        const PipelineResult pr = run_pipeline(ts, opt);
        CHECK(pr.row.schedulable == (pr.row.objective_value <= ts.tasks[0].deadline));
        // schedulable rows carry a trace that passes the audits
        const auto problems = audit_schedule(ts, pr.graph, pr.schedule);
        CHECK(problems.empty());
    }
}

TEST_CASE("pipeline rejects invalid input at the validate stage") {
    TaskSet ts = frame_set({task({nc(1), nc(1)}, 5, 5)}, 1, 1);
    PipelineOptions opt;
    try {
        run_pipeline(ts, opt);
        FAIL("expected pipeline_error");
    } catch (const pipeline_error& e) {
        CHECK(e.stage == "validate");
    }
}

TEST_CASE("pipeline reduction/model mismatch carries the reduce stage label") {
    TaskSet ts = frame_set({task({nc(1)}, 5, 5)}, 1, 1);
    PipelineOptions opt;
    opt.reduction = ReductionKind::Periodic;
    try {
        run_pipeline(ts, opt);
        FAIL("expected pipeline_error");
    } catch (const pipeline_error& e) {
        CHECK(e.stage == "reduce");
    }
}

TEST_CASE("lower bound components on exactly solved corpus instances") {
    const auto corpus = make_oracle_corpus(10, 3);
    for (const OracleEntry& e : corpus) {
        PipelineOptions opt;
        opt.solver.kind = SolverChoice::Exact;
        opt.cs_mode = CsMode::NonPreemptiveCS;
        const PipelineResult pr = run_pipeline(e.ts, opt);
        REQUIRE(pr.row.solver_status == RowSolverStatus::Optimal);
        CHECK(pr.row.shop_objective == e.shop_makespan);
        // the optimal makespan respects both bound ingredients
        CHECK(lower_bound_holds(pr.row, e.mmss_makespan));
    }
}

TEST_CASE("variant names compose from the options") {
    PipelineOptions opt;
    CHECK(variant_name(opt) == "JS-LEDF-P");
    opt.policy = Policy::PartitionedEdf;
    opt.cs_mode = CsMode::NonPreemptiveCS;
    CHECK(variant_name(opt) == "JS-PEDF-NP");
}

TEST_CASE("sweep output format and determinism") {
    SweepConfig sc;
    sc.gen.processors = 2;
    sc.gen.resources = 2;
    sc.gen.tasks_per_set = 6;
    sc.gen.resolution = 1000;
    sc.levels = {0.1, 0.5};
    sc.replicates = 4;
    sc.master_seed = 9;
    sc.workers = 2;
    sc.options.solver.kind = SolverChoice::Dispatch;

    const auto rows = acceptance_sweep(sc);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].total == 4);
    CHECK(rows[0].variant == "JS-LEDF-P");

    const std::string a = results_csv(rows);
    const std::string b = results_csv(acceptance_sweep(sc));
    CHECK(a == b);
    CHECK(a.find("level,variant,accepted,total,ratio\n") == 0);
}

TEST_CASE("near-zero utilization level accepts everything") {
    SweepConfig sc;
    sc.gen.processors = 2;
    sc.gen.resources = 2;
    sc.gen.tasks_per_set = 6;
    sc.gen.resolution = 1000;
    sc.levels = {0.0};
    sc.replicates = 5;
    sc.master_seed = 11;
    sc.options.solver.kind = SolverChoice::Dispatch;
    const auto rows = acceptance_sweep(sc);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].accepted == rows[0].total);
}

TEST_CASE("manifest records the sweep configuration") {
    SweepConfig sc;
    sc.gen.processors = 4;
    sc.levels = {0.5};
    sc.master_seed = 17;
    const nlohmann::json j = sweep_manifest(sc);
    CHECK(j.at("master_seed") == 17);
    CHECK(j.at("generator").at("processors") == 4);
    CHECK(j.at("variant") == "JS-LEDF-P");
}

TEST_CASE("periodic pipeline produces a lateness verdict") {
    TaskSet ts = periodic_set({task({nc(1), cs(1, 0), nc(1)}, 6, 6),
                               task({nc(2), cs(1, 0), nc(1)}, 12, 12)},
                              2, 1);
    PipelineOptions opt;
    opt.reduction = ReductionKind::Periodic;
    opt.solver.kind = SolverChoice::Exact;
    const PipelineResult pr = run_pipeline(ts, opt);
    CHECK(pr.row.schedulable == (pr.row.objective_value <= 0));
    const auto problems = audit_schedule(ts, pr.graph, pr.schedule);
    CHECK(problems.empty());
}

TEST_CASE("delay and full reductions agree up to the omitted lock-free tasks") {
    for (std::uint64_t seed = 50; seed < 80; ++seed) {
        const TaskSet ts = random_frame_set(seed, 4, 2, 2);
        PipelineOptions full;
        full.solver.kind = SolverChoice::Exact;
        full.solver.limits = {20000, 10.0};
        PipelineOptions delays = full;
        delays.reduction = ReductionKind::WithDelays;
        const PipelineResult a = run_pipeline(ts, full);
        const PipelineResult b = run_pipeline(ts, delays);
        if (a.row.solver_status != RowSolverStatus::Optimal ||
            b.row.solver_status != RowSolverStatus::Optimal)
            continue;
        // lock-free tasks live alone on dedicated machines, so the full
        // optimum is the delay optimum or the longest omitted task
        std::int64_t expected = b.row.shop_objective;
        for (const std::size_t i : b.instance.omitted_tasks)
            expected = std::max<std::int64_t>(expected, ts.tasks[i].total_wcet());
        CHECK(a.row.shop_objective == expected);
    }
}
