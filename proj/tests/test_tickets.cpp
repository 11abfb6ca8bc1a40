#include "doctest.h"

#include <numeric>
#include <random>

#include "dgsched/tickets.hpp"

#include "testutil.hpp"

using namespace dgsched;
using namespace testutil;

namespace {

// random topologically consistent ordering of all graph vertices
std::vector<std::uint32_t> random_linear_extension(const DependencyGraph& g,
                                                   std::mt19937_64& rng) {
    const auto succ = g.successors();
    std::vector<std::uint32_t> indeg(g.vertices.size(), 0);
    for (const auto& s : succ)
        for (std::uint32_t w : s) ++indeg[w];
    std::vector<std::uint32_t> frontier;
    for (std::uint32_t v = 0; v < g.vertices.size(); ++v)
        if (indeg[v] == 0) frontier.push_back(v);
    std::vector<std::uint32_t> order;
    while (!frontier.empty()) {
        const std::size_t pick = rng() % frontier.size();
        const std::uint32_t v = frontier[pick];
        frontier.erase(frontier.begin() + pick);
        order.push_back(v);
        for (std::uint32_t w : succ[v])
            if (--indeg[w] == 0) frontier.push_back(w);
    }
    return order;
}

}  // namespace

TEST_CASE("order lookup follows the running job number") {
    TaskTickets t1{2, 2, {1, 3, 6, 8, 9, 9}};
    CHECK(get_cs_order(t1, 13, 1) == 8);
    CHECK(get_cs_order(t1, 0, 0) == 1);

    TaskTickets t2{2, 2, {0, 2, 5, 7, 9, 9}};
    CHECK(get_cs_order(t2, 5, 0) == 5);

    CHECK_THROWS_AS(get_cs_order(t1, 0, 2), std::out_of_range);
}

TEST_CASE("single task, single critical section") {
    TaskSet ts = frame_set({task({nc(1), cs(1, 0), nc(1)}, 5, 5)}, 1, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    const TicketTable table = build_ticket_table(ts, g);
    REQUIRE(table.tasks.size() == 1);
    CHECK(table.tasks[0].total_jobs == 1);
    CHECK(table.tasks[0].total_cs == 1);
    CHECK(table.tasks[0].job_order == std::vector<std::uint32_t>{0, 1});
    CHECK(table.num_cs == std::vector<std::uint32_t>{1});
}

TEST_CASE("job_order length matches jobs x sections plus resource count") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const TaskSet ts = random_frame_set(seed);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s = solve_dispatch(inst, DispatchRule::MostWorkRemaining);
        const DependencyGraph g = build_from_schedule(ts, inst, s);
        const TicketTable table = build_ticket_table(ts, g);
        for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
            const TaskTickets& e = table.tasks[i];
            CHECK(e.job_order.size() ==
                  static_cast<std::size_t>(e.total_jobs) * e.total_cs + ts.resources);
            // tail entries mirror the per-resource totals
            for (std::uint32_t r = 0; r < ts.resources; ++r)
                CHECK(e.job_order[e.job_order.size() - ts.resources + r] == table.num_cs[r]);
        }
    }
}

TEST_CASE("orders are a bijection onto the resource chain positions") {
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const TaskSet ts = random_frame_set(seed);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s = solve_dispatch(inst, DispatchRule::LongestProcessingTime);
        const DependencyGraph g = build_from_schedule(ts, inst, s);
        const TicketTable table = build_ticket_table(ts, g);

        std::vector<std::vector<std::uint32_t>> per_resource(ts.resources);
        for (std::uint32_t i = 0; i < ts.tasks.size(); ++i) {
            std::size_t k = 0;
            for (std::uint32_t occ = 0; occ < table.tasks[i].total_jobs; ++occ)
                for (const Segment& seg : ts.tasks[i].segments)
                    if (seg.is_critical())
                        per_resource[*seg.resource].push_back(table.tasks[i].job_order[k++]);
        }
        for (std::uint32_t r = 0; r < ts.resources; ++r) {
            std::sort(per_resource[r].begin(), per_resource[r].end());
            for (std::uint32_t k = 0; k < per_resource[r].size(); ++k)
                CHECK(per_resource[r][k] == k);
            CHECK(per_resource[r].size() == table.num_cs[r]);
        }
    }
}

TEST_CASE("ticket discipline reproduces the resource chains") {
    std::mt19937_64 rng(4242);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const TaskSet ts = random_frame_set(seed);
        const JobShopInstance inst = reduce_frame_based(ts);
        const ShopSchedule s = solve_dispatch(inst, DispatchRule::MostWorkRemaining);
        const DependencyGraph g = build_from_schedule(ts, inst, s);
        const TicketTable table = build_ticket_table(ts, g);
        for (int trial = 0; trial < 20; ++trial) {
            const auto order = random_linear_extension(g, rng);
            const ReplayResult r = replay_ticket_discipline(ts, g, table, order);
            if (!r.ok) MESSAGE(r.problem);
            CHECK(r.ok);
        }
    }
}

TEST_CASE("serving ticket wraps across hyper-period repetitions") {
    TaskSet ts = frame_set({task({nc(1), cs(1, 0), nc(1)}, 6, 6),
                            task({cs(2, 0)}, 6, 6)},
                           2, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::MostWorkRemaining);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    const TicketTable table = build_ticket_table(ts, g);

    std::mt19937_64 rng(7);
    auto order = random_linear_extension(g, rng);
    // two consecutive hyper-periods: job numbers advance, the table repeats
    const ReplayResult first = replay_ticket_discipline(ts, g, table, order);
    CHECK(first.ok);
    const ReplayResult second = replay_ticket_discipline(ts, g, table, order);
    CHECK(second.ok);
}

TEST_CASE("five-task periodic layout: lengths and per-resource totals") {
    // four 25-unit tasks with one access to each resource per job, plus a
    // 50-unit task with the same access pattern; hyper-period 50 gives nine
    // requests per resource
    auto pattern = [](std::uint32_t first, std::uint32_t second, Time period) {
        return task({nc(1), cs(1, first), nc(1), cs(1, second), nc(1)}, period, period);
    };
    TaskSet ts = periodic_set({pattern(0, 1, 25), pattern(1, 0, 25), pattern(0, 1, 25),
                               pattern(1, 0, 25), pattern(1, 0, 50)},
                              2, 2);
    REQUIRE(validate(ts).empty());
    const JobShopInstance inst = reduce_periodic(ts);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::EarliestDeadlineFirst);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    const TicketTable table = build_ticket_table(ts, g);

    CHECK(table.num_cs == std::vector<std::uint32_t>{9, 9});
    CHECK(table.tasks[0].total_jobs == 2);
    CHECK(table.tasks[0].total_cs == 2);
    CHECK(table.tasks[0].job_order.size() == 6);  // 2*2 + 2
    CHECK(table.tasks[4].total_jobs == 1);
    CHECK(table.tasks[4].total_cs == 2);
    CHECK(table.tasks[4].job_order.size() == 4);  // 1*2 + 2
    for (const TaskTickets& e : table.tasks) {
        CHECK(e.job_order[e.job_order.size() - 2] == 9);
        CHECK(e.job_order[e.job_order.size() - 1] == 9);
    }
}

TEST_CASE("json export mirrors the table fields") {
    TaskSet ts = frame_set({task({nc(1), cs(1, 0), nc(1)}, 5, 5)}, 1, 1);
    const JobShopInstance inst = reduce_frame_based(ts);
    const ShopSchedule s = solve_dispatch(inst, DispatchRule::FirstInFirstOut);
    const DependencyGraph g = build_from_schedule(ts, inst, s);
    const TicketTable table = build_ticket_table(ts, g);
    const nlohmann::json j = ticket_table_to_json(table);
    CHECK(j.at("tasks").at(0).at("total_jobs") == 1);
    CHECK(j.at("tasks").at(0).at("total_cs") == 1);
    CHECK(j.at("tasks").at(0).at("current_cs") == 0);
    CHECK(j.at("num_cs").at(0) == 1);
}
