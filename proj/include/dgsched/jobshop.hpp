#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgsched/task_model.hpp"
#include "dgsched/time.hpp"

namespace dgsched {

// Back-reference from a shop operation to the segment occurrence it encodes.
struct SourceRef {
    std::uint32_t task{0};
    std::uint32_t segment{0};
    std::uint32_t occurrence{0};

    friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

struct ShopOperation {
    std::uint32_t job{0};
    std::uint32_t position{0};
    std::uint32_t machine{0};
    Time processing{0};
    // minimum idle time between the end of the previous operation in the
    // chain and the start of this one (0 for chain-adjacent operations)
    Time min_gap_after_prev{0};
    SourceRef source;
};

struct ShopJob {
    std::vector<ShopOperation> operations;
    Time release{0};
    std::optional<Time> abs_deadline;
    // work after the last operation that counts towards the job's finish
    // time but occupies no shop (trailing non-critical section in the
    // delay reduction)
    Time tail{0};
    // previous occurrence of the same task; its last operation must finish
    // before this job's first operation starts
    std::optional<std::size_t> prev_job;
};

enum class ShopObjective { Makespan, MaxLateness };

struct MachineRole {
    enum Kind { Resource, TaskDedicated };
    Kind kind{Resource};
    std::uint32_t index{0};
};

struct JobShopInstance {
    std::uint32_t machines{0};
    std::vector<ShopJob> jobs;
    ShopObjective objective{ShopObjective::Makespan};
    std::vector<MachineRole> machine_roles;
    // delay reduction: tasks dropped because they have no critical section
    std::vector<std::size_t> omitted_tasks;

    std::size_t total_operations() const {
        std::size_t n = 0;
        for (const ShopJob& j : jobs) n += j.operations.size();
        return n;
    }
};

// Flat operation ids: ops of job 0 first, then job 1, etc.
struct OpIndexer {
    std::vector<std::size_t> offset;
    std::size_t count{0};

    explicit OpIndexer(const JobShopInstance& inst) {
        offset.reserve(inst.jobs.size());
        for (const ShopJob& j : inst.jobs) {
            offset.push_back(count);
            count += j.operations.size();
        }
    }

    std::size_t id(std::size_t job, std::size_t pos) const { return offset[job] + pos; }
};

// Structural sanity check used by tests and the solvers.
inline void validate_instance(const JobShopInstance& inst) {
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        const ShopJob& job = inst.jobs[j];
        if (job.release < 0)
            throw std::invalid_argument("job release must be non-negative");
        if (inst.objective == ShopObjective::MaxLateness && !job.abs_deadline)
            throw std::invalid_argument("max-lateness objective requires deadlines on every job");
        if (job.prev_job && *job.prev_job >= j)
            throw std::invalid_argument("prev_job must reference an earlier job");
        for (std::size_t p = 0; p < job.operations.size(); ++p) {
            const ShopOperation& op = job.operations[p];
            if (op.job != j || op.position != p)
                throw std::invalid_argument("operation job/position mismatch");
            if (op.machine >= inst.machines)
                throw std::invalid_argument("operation machine out of range");
            if (op.processing < 0 || op.min_gap_after_prev < 0)
                throw std::invalid_argument("negative processing or gap");
        }
    }
    if (!inst.machine_roles.empty() && inst.machine_roles.size() != inst.machines)
        throw std::invalid_argument("machine role table size mismatch");
}

namespace detail {

inline void require_valid(const TaskSet& ts, const char* what) {
    if (!is_valid(ts))
        throw std::invalid_argument(std::string(what) + " requires a valid task set");
}

}  // namespace detail

// Frame-based makespan form: one machine per resource plus one dedicated
// machine per task; every segment becomes an operation of that task's job.
inline JobShopInstance reduce_frame_based(const TaskSet& ts) {
    detail::require_valid(ts, "reduce_frame_based");
    if (ts.release_model != ReleaseModel::FrameBased)
        throw std::invalid_argument("reduce_frame_based requires a frame-based task set");

    const std::uint32_t z = ts.resources;
    const std::uint32_t n = static_cast<std::uint32_t>(ts.tasks.size());
    JobShopInstance inst;
    inst.machines = z + n;
    inst.objective = ShopObjective::Makespan;
    for (std::uint32_t r = 0; r < z; ++r)
        inst.machine_roles.push_back({MachineRole::Resource, r});
    for (std::uint32_t i = 0; i < n; ++i)
        inst.machine_roles.push_back({MachineRole::TaskDedicated, i});

    for (std::uint32_t i = 0; i < n; ++i) {
        const Task& t = ts.tasks[i];
        ShopJob job;
        for (std::uint32_t s = 0; s < t.segments.size(); ++s) {
            const Segment& seg = t.segments[s];
            ShopOperation op;
            op.job = i;
            op.position = s;
            op.machine = seg.is_critical() ? *seg.resource : z + i;
            op.processing = seg.wcet;
            op.source = {i, s, 0};
            job.operations.push_back(op);
        }
        inst.jobs.push_back(std::move(job));
    }
    return inst;
}

// Frame-based delay form: resource machines only. Non-critical work turns
// into releases (leading), chain gaps (inner) and job tails (trailing).
inline JobShopInstance reduce_with_delays(const TaskSet& ts) {
    detail::require_valid(ts, "reduce_with_delays");
    if (ts.release_model != ReleaseModel::FrameBased)
        throw std::invalid_argument("reduce_with_delays requires a frame-based task set");

    JobShopInstance inst;
    inst.machines = ts.resources;
    inst.objective = ShopObjective::Makespan;
    for (std::uint32_t r = 0; r < ts.resources; ++r)
        inst.machine_roles.push_back({MachineRole::Resource, r});

    for (std::uint32_t i = 0; i < ts.tasks.size(); ++i) {
        const Task& t = ts.tasks[i];
        if (t.critical_section_count() == 0) {
            inst.omitted_tasks.push_back(i);
            continue;
        }
        ShopJob job;
        Time pending_gap = 0;  // non-critical work since the previous CS
        bool saw_cs = false;
        for (std::uint32_t s = 0; s < t.segments.size(); ++s) {
            const Segment& seg = t.segments[s];
            if (!seg.is_critical()) {
                pending_gap = checked_add(pending_gap, seg.wcet);
                continue;
            }
            ShopOperation op;
            op.job = static_cast<std::uint32_t>(inst.jobs.size());
            op.position = static_cast<std::uint32_t>(job.operations.size());
            op.machine = *seg.resource;
            op.processing = seg.wcet;
            op.source = {i, s, 0};
            if (!saw_cs) {
                job.release = pending_gap;
            } else {
                op.min_gap_after_prev = pending_gap;
            }
            pending_gap = 0;
            saw_cs = true;
            job.operations.push_back(op);
        }
        job.tail = pending_gap;
        inst.jobs.push_back(std::move(job));
    }
    return inst;
}

// Periodic lateness form: jobs unrolled over one hyper-period, resource
// machines plus one dedicated machine per task; occurrences of one task
// are chained so they cannot overlap.
inline JobShopInstance reduce_periodic(const TaskSet& ts) {
    detail::require_valid(ts, "reduce_periodic");
    if (ts.release_model != ReleaseModel::PeriodicSynchronous)
        throw std::invalid_argument("reduce_periodic requires a periodic task set");

    const Time h = hyperperiod(ts);
    const std::uint32_t z = ts.resources;
    const std::uint32_t n = static_cast<std::uint32_t>(ts.tasks.size());
    JobShopInstance inst;
    inst.machines = z + n;
    inst.objective = ShopObjective::MaxLateness;
    for (std::uint32_t r = 0; r < z; ++r)
        inst.machine_roles.push_back({MachineRole::Resource, r});
    for (std::uint32_t i = 0; i < n; ++i)
        inst.machine_roles.push_back({MachineRole::TaskDedicated, i});

    for (std::uint32_t i = 0; i < n; ++i) {
        const Task& t = ts.tasks[i];
        const Time jobs_of_task = h / t.period;
        std::optional<std::size_t> prev;
        for (Time occ = 0; occ < jobs_of_task; ++occ) {
            ShopJob job;
            job.release = checked_mul(occ, t.period);
            job.abs_deadline = checked_add(job.release, t.deadline);
            job.prev_job = prev;
            const std::uint32_t job_index = static_cast<std::uint32_t>(inst.jobs.size());
            for (std::uint32_t s = 0; s < t.segments.size(); ++s) {
                const Segment& seg = t.segments[s];
                ShopOperation op;
                op.job = job_index;
                op.position = s;
                op.machine = seg.is_critical() ? *seg.resource : z + i;
                op.processing = seg.wcet;
                op.source = {i, s, static_cast<std::uint32_t>(occ)};
                job.operations.push_back(op);
            }
            prev = job_index;
            inst.jobs.push_back(std::move(job));
        }
    }
    return inst;
}

// Debug export; not a stability-guaranteed format.
inline nlohmann::json instance_to_json(const JobShopInstance& inst) {
    nlohmann::json jjobs = nlohmann::json::array();
    for (const ShopJob& job : inst.jobs) {
        nlohmann::json jops = nlohmann::json::array();
        for (const ShopOperation& op : job.operations) {
            jops.push_back({{"machine", op.machine},
                            {"processing", op.processing},
                            {"min_gap_after_prev", op.min_gap_after_prev},
                            {"source", {{"task", op.source.task},
                                        {"segment", op.source.segment},
                                        {"occurrence", op.source.occurrence}}}});
        }
        nlohmann::json jj = {{"release", job.release},
                             {"tail", job.tail},
                             {"operations", jops}};
        jj["abs_deadline"] = job.abs_deadline ? nlohmann::json(*job.abs_deadline) : nlohmann::json(nullptr);
        jj["prev_job"] = job.prev_job ? nlohmann::json(*job.prev_job) : nlohmann::json(nullptr);
        jjobs.push_back(jj);
    }
    nlohmann::json jroles = nlohmann::json::array();
    for (const MachineRole& r : inst.machine_roles)
        jroles.push_back({{"kind", r.kind == MachineRole::Resource ? "resource" : "task"},
                          {"index", r.index}});
    return {{"machines", inst.machines},
            {"objective", inst.objective == ShopObjective::Makespan ? "makespan" : "max_lateness"},
            {"machine_roles", jroles},
            {"omitted_tasks", inst.omitted_tasks},
            {"jobs", jjobs}};
}

}  // namespace dgsched
