#include "doctest.h"

#include "dgsched/depgraph.hpp"

#include "testutil.hpp"

using namespace dgsched;
using namespace testutil;

TEST_CASE("forced chain for two single-section tasks") {
    TaskSet ts = frame_set({task({cs(1, 0)}, 4, 4), task({cs(1, 0)}, 4, 4)}, 2, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    ShopSchedule s;
    s.instance = &inst;
    s.start = {0, 1};  // task 0 first
    s.objective = objective(inst, s.start);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    REQUIRE(g.resource_chains[0].size() == 2);
    CHECK(g.resource_chains[0][0] == g.vertex_id(0, 0, 0));
    CHECK(g.resource_chains[0][1] == g.vertex_id(1, 0, 0));
    CHECK(critical_path_length(g) == 2);
}

TEST_CASE("single task graph is its segment chain") {
    TaskSet ts = frame_set({task({nc(2), cs(3, 0), nc(1)}, 9, 9)}, 1, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    CHECK(critical_path_length(g) == ts.tasks[0].total_wcet());
    CHECK(g.task_edges.size() == 2);
}

TEST_CASE("graph to schedule: longest-path placement") {
    TaskSet ts = frame_set({task({nc(2), cs(3, 0)}, 9, 9)}, 1, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    const ShopSchedule s0 = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
    const DependencyGraph g = build_from_schedule(ts, inst, s0);
    const ShopSchedule s = schedule_from_graph(ts, inst, g);
    CHECK(s.start[0] == 0);
    CHECK(s.start[1] == 2);
    CHECK(s.objective == 5);
}

TEST_CASE("graph to schedule: serialized critical sections") {
    TaskSet ts = frame_set({task({cs(1, 0)}, 4, 4), task({cs(1, 0)}, 4, 4)}, 2, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    ShopSchedule order;
    order.instance = &inst;
    order.start = {0, 1};
    order.objective = objective(inst, order.start);
    const DependencyGraph g = build_from_schedule(ts, inst, order);
    const ShopSchedule s = schedule_from_graph(ts, inst, g);
    CHECK(s.start[0] == 0);
    CHECK(s.start[1] == 1);
    CHECK(s.objective == 2);
}

TEST_CASE("critical path of trivial graphs") {
    SUBCASE("single vertex") {
        TaskSet ts = frame_set({task({nc(4)}, 9, 9)}, 1, 1);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
        CHECK(critical_path_length(build_from_schedule(ts, inst, s)) == 4);
    }
    SUBCASE("two parallel tasks") {
        TaskSet ts = frame_set({task({nc(3)}, 9, 9), task({nc(5)}, 9, 9)}, 2, 1);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
        CHECK(critical_path_length(build_from_schedule(ts, inst, s)) == 5);
    }
}

TEST_CASE("cycle detection returns a witness") {
    DependencyGraph g;
    g.resource_chains.resize(1);
    g.vertices.push_back({0, 0, 0, 1, std::nullopt, 0});
    g.vertices.push_back({0, 0, 1, 1, std::nullopt, 0});
    g.task_edges.push_back({0, 1});
    g.task_edges.push_back({1, 0});
    g.task_offset = {0};
    g.occ_count = {1};
    g.eta = {2};
    try {
        critical_path_length(g);
        FAIL("expected cycle_error");
    } catch (const cycle_error& e) {
        CHECK(e.cycle.size() == 2);
    }
}

TEST_CASE("equal start times on one resource machine are rejected") {
    TaskSet ts = frame_set({task({cs(1, 0)}, 4, 4), task({cs(1, 0)}, 4, 4)}, 2, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    ShopSchedule bogus;
    bogus.instance = &inst;
    bogus.start = {0, 0};
    bogus.objective = 0;
    CHECK_THROWS_AS(build_from_schedule(ts, inst, bogus), std::invalid_argument);
}

TEST_CASE("schedule/instance mismatch is detected") {
    TaskSet a = frame_set({task({nc(2)}, 9, 9)}, 1, 1);
    TaskSet b = frame_set({task({nc(2), cs(1, 0), nc(3)}, 9, 9)}, 1, 1);
    const JobShopInstance inst = reduce_frame_based(a);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
    CHECK_THROWS_AS(build_from_schedule(b, inst, s), std::invalid_argument);
}

TEST_CASE("graph length is bounded by the schedule objective") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const TaskSet ts = random_frame_set(seed, 4, 2, 2);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s = solve_dispatch(
            inst, seed % 2 ? DispatchRule::MostWorkRemaining : DispatchRule::FirstInFirstOut);
        const DependencyGraph g = build_from_schedule(ts, inst, s);
        CHECK(critical_path_length(g) <= s.objective);
    }
}

TEST_CASE("round trip: rebuilt schedule meets the graph length exactly") {
    for (std::uint64_t seed = 300; seed < 500; ++seed) {
        const TaskSet ts = random_frame_set(seed, 4, 2, 2);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s0 = solve_dispatch(inst, DispatchRule::LongestProcessingTime);
        const DependencyGraph g = build_from_schedule(ts, inst, s0);
        const Time len = critical_path_length(g);
        const ShopSchedule s1 = schedule_from_graph(ts, inst, g);
        CHECK(is_feasible(inst, s1.start));
        CHECK(s1.objective == len);
        CHECK(len <= s0.objective);
    }
}

TEST_CASE("periodic graphs chain consecutive occurrences") {
    TaskSet ts = periodic_set({task({nc(1), cs(1, 0), nc(1)}, 5, 5)}, 1, 1);
    const JobShopInstance inst = reduce_periodic(ts);
    // force task occurrences apart with a dispatch schedule
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::EarliestDeadlineFirst);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    REQUIRE(g.occ_count[0] == 1);

    TaskSet two = periodic_set({task({nc(1), cs(1, 0), nc(1)}, 5, 5),
                                task({nc(1)}, 10, 10)},
                               1, 1);
    const JobShopInstance inst2 = reduce_periodic(two);
    const ShopSchedule s2 = solve_dispatch(inst2, DispatchRule::EarliestDeadlineFirst);
    const DependencyGraph g2 = build_from_schedule(two, inst2, s2);
    REQUIRE(g2.occ_count[0] == 2);
    // last segment of occurrence 0 precedes first segment of occurrence 1
    const auto succ = g2.successors();
    const auto from = g2.vertex_id(0, 0, 2);
    const auto to = g2.vertex_id(0, 1, 0);
    CHECK(std::find(succ[from].begin(), succ[from].end(), static_cast<std::uint32_t>(to)) !=
          succ[from].end());
}

TEST_CASE("DOT export styles resource edges") {
    TaskSet ts = frame_set({task({cs(1, 0)}, 4, 4), task({cs(1, 0)}, 4, 4)}, 2, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    const std::string dot = graph_dot(g);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("style=dashed") != std::string::npos);
}
