#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgsched/depgraph.hpp"
#include "dgsched/task_model.hpp"

namespace dgsched {

// Per-task runtime enforcement data: job_order lists the execution order of
// every critical section of every job in one hyper-period, followed by Z
// entries holding the per-resource totals.
struct TaskTickets {
    std::uint32_t total_jobs{0};
    std::uint32_t total_cs{0};
    std::vector<std::uint32_t> job_order;
};

struct TicketTable {
    std::vector<TaskTickets> tasks;
    std::vector<std::uint32_t> num_cs;  // per resource, one hyper-period
};

// Orders follow each resource chain of the graph from head (order 0) to tail.
inline TicketTable build_ticket_table(const TaskSet& ts, const DependencyGraph& g) {
    if (!is_acyclic(g))
        throw std::invalid_argument("build_ticket_table requires an acyclic graph");
    const std::uint32_t z = ts.resources;

    TicketTable table;
    table.num_cs.assign(z, 0);
    std::vector<std::uint32_t> order_of(g.vertices.size(), 0);
    for (std::uint32_t r = 0; r < z; ++r) {
        table.num_cs[r] = static_cast<std::uint32_t>(g.resource_chains[r].size());
        for (std::uint32_t k = 0; k < g.resource_chains[r].size(); ++k)
            order_of[g.resource_chains[r][k]] = k;
    }

    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i) {
        const Task& t = ts.tasks[i];
        TaskTickets entry;
        entry.total_jobs = g.occ_count[i];
        entry.total_cs = static_cast<std::uint32_t>(t.critical_section_count());
        for (std::uint32_t occ = 0; occ < entry.total_jobs; ++occ)
            for (std::uint32_t s = 0; s < t.segments.size(); ++s)
                if (t.segments[s].is_critical())
                    entry.job_order.push_back(order_of[g.vertex_id(i, occ, s)]);
        for (std::uint32_t r = 0; r < z; ++r)
            entry.job_order.push_back(table.num_cs[r]);
        table.tasks.push_back(std::move(entry));
    }
    return table;
}

// Order lookup for the critical section `current_cs` of a job with running
// job number `job_no`. The counts region at the end of job_order is not
// addressable through this call.
inline std::uint32_t get_cs_order(const TaskTickets& entry, std::uint64_t job_no,
                                  std::uint32_t current_cs) {
    if (current_cs >= entry.total_cs)
        throw std::out_of_range("current_cs beyond the task's critical section count");
    const std::uint64_t current_jobno = entry.total_jobs ? job_no % entry.total_jobs : 0;
    const std::uint64_t index =
        current_jobno * entry.total_cs + current_cs;
    if (index >= static_cast<std::uint64_t>(entry.total_jobs) * entry.total_cs)
        throw std::out_of_range("job_order index reaches the counts region");
    return entry.job_order[index];
}

struct ReplayResult {
    bool ok{true};
    std::string problem;
    // grant order per resource, as vertex ids
    std::vector<std::vector<std::uint32_t>> grants;
};

// Replays the serving-ticket semaphore discipline over a topologically
// consistent arrival order of the graph vertices: a critical section is
// granted only when its precomputed order matches the resource's serving
// ticket; the ticket wraps to zero once every critical section of the
// hyper-period was served. Verifies that grants reproduce the resource
// chains and that nothing is left waiting.
inline ReplayResult replay_ticket_discipline(const TaskSet& ts, const DependencyGraph& g,
                                             const TicketTable& table,
                                             const std::vector<std::uint32_t>& arrival_order) {
    ReplayResult res;
    const std::uint32_t z = ts.resources;
    std::vector<std::uint32_t> serving(z, 0);
    struct Waiter {
        std::uint32_t order;
        std::uint32_t vertex;
    };
    std::vector<std::vector<Waiter>> queue(z);  // kept sorted by order
    res.grants.resize(z);

    // per (task, occurrence): running index of the next critical section
    std::vector<std::vector<std::uint32_t>> cs_counter(ts.tasks.size());
    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i)
        cs_counter[i].assign(g.occ_count[i], 0);

    auto serve = [&](std::uint32_t r, std::uint32_t vertex) {
        res.grants[r].push_back(vertex);
        ++serving[r];
        if (serving[r] == table.num_cs[r]) serving[r] = 0;
    };

    for (const std::uint32_t v : arrival_order) {
        const auto& vx = g.vertices[v];
        if (!vx.resource) continue;
        const std::uint32_t r = *vx.resource;
        const std::uint32_t cs_idx = cs_counter[vx.task][vx.occurrence]++;
        const std::uint32_t order = get_cs_order(table.tasks[vx.task], vx.occurrence, cs_idx);
        if (order == serving[r]) {
            serve(r, v);
            // unlock chains: grant queued waiters as long as the head matches
            while (!queue[r].empty() && queue[r].front().order == serving[r]) {
                serve(r, queue[r].front().vertex);
                queue[r].erase(queue[r].begin());
            }
        } else {
            Waiter w{order, v};
            auto it = std::lower_bound(queue[r].begin(), queue[r].end(), w,
                                       [](const Waiter& a, const Waiter& b) {
                                           return a.order < b.order;
                                       });
            queue[r].insert(it, w);
        }
    }

    for (std::uint32_t r = 0; r < z; ++r) {
        if (!queue[r].empty()) {
            res.ok = false;
            res.problem = "deadlock: critical sections left waiting on resource " +
                          std::to_string(r);
            return res;
        }
        if (res.grants[r] != g.resource_chains[r]) {
            res.ok = false;
            res.problem = "grant order diverged from the resource chain of resource " +
                          std::to_string(r);
            return res;
        }
    }
    return res;
}

inline nlohmann::json ticket_table_to_json(const TicketTable& table) {
    nlohmann::json jtasks = nlohmann::json::array();
    for (const TaskTickets& t : table.tasks)
        jtasks.push_back({{"total_jobs", t.total_jobs},
                          {"total_cs", t.total_cs},
                          {"job_order", t.job_order},
                          {"current_cs", 0}});
    return {{"tasks", jtasks}, {"num_cs", table.num_cs}};
}

}  // namespace dgsched
