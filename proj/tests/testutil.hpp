#pragma once

// Shared helpers for the test suites: compact task-set builders and a seeded
// generator of small frame-based instances.

#include <optional>
#include <random>
#include <vector>

#include "dgsched/dgsched.hpp"

namespace testutil {

using namespace dgsched;

inline Segment nc(Time wcet) { return {wcet, std::nullopt}; }
inline Segment cs(Time wcet, std::uint32_t resource) { return {wcet, resource}; }

inline Task task(std::vector<Segment> segs, Time period, Time deadline) {
    Task t;
    t.segments = std::move(segs);
    t.period = period;
    t.deadline = deadline;
    return t;
}

inline TaskSet frame_set(std::vector<Task> tasks, std::uint32_t m, std::uint32_t z,
                         Time resolution = 1) {
    TaskSet ts;
    ts.tasks = std::move(tasks);
    ts.processors = m;
    ts.resources = z;
    ts.release_model = ReleaseModel::FrameBased;
    ts.resolution = resolution;
    return ts;
}

inline TaskSet periodic_set(std::vector<Task> tasks, std::uint32_t m, std::uint32_t z,
                            Time resolution = 1) {
    TaskSet ts = frame_set(std::move(tasks), m, z, resolution);
    ts.release_model = ReleaseModel::PeriodicSynchronous;
    return ts;
}

// Random small frame-based sets used across the suites: up to `max_tasks`
// tasks of alternating segments with small integer WCETs, deadline roomy
// enough to be valid.
inline TaskSet random_frame_set(std::uint64_t seed, std::size_t max_tasks = 8,
                                std::size_t max_cs_per_task = 3, std::uint32_t max_z = 3) {
    std::mt19937_64 rng(seed);
    TaskSet ts;
    ts.release_model = ReleaseModel::FrameBased;
    ts.resolution = 1;
    ts.processors = (rng() & 1) ? 2 : 4;
    ts.resources = 1 + static_cast<std::uint32_t>(rng() % max_z);

    const std::size_t n = 1 + rng() % max_tasks;
    Time work = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Task t;
        const std::size_t k_cs = rng() % (max_cs_per_task + 1);
        auto wcet = [&]() { return static_cast<Time>(1 + rng() % 9); };
        if (k_cs == 0) {
            t.segments.push_back(nc(wcet()));
        } else {
            const bool lead_nc = rng() & 1;
            if (lead_nc) t.segments.push_back(nc(wcet()));
            for (std::size_t k = 0; k < k_cs; ++k) {
                t.segments.push_back(cs(wcet(), static_cast<std::uint32_t>(rng() % ts.resources)));
                const bool inner_nc = rng() & 1;
                if (inner_nc && k + 1 < k_cs) t.segments.push_back(nc(wcet()));
            }
            if (rng() & 1) t.segments.push_back(nc(wcet()));
        }
        work += t.total_wcet();
        ts.tasks.push_back(std::move(t));
    }
    for (Task& t : ts.tasks) {
        t.period = work + 8;
        t.deadline = t.period;
    }
    return ts;
}

}  // namespace testutil
