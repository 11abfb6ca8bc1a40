#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgsched/time.hpp"

namespace dgsched {

enum class ReleaseModel { FrameBased, PeriodicSynchronous };

// One computation segment: a critical section when it names a resource,
// an ordinary (non-critical) segment otherwise.
struct Segment {
    Time wcet{0};
    std::optional<std::uint32_t> resource;

    bool is_critical() const { return resource.has_value(); }

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Task {
    std::vector<Segment> segments;
    Time period{0};
    Time deadline{0};

    Time total_wcet() const {
        Time c = 0;
        for (const Segment& s : segments) c = checked_add(c, s.wcet);
        return c;
    }

    std::size_t critical_section_count() const {
        std::size_t k = 0;
        for (const Segment& s : segments)
            if (s.is_critical()) ++k;
        return k;
    }

    friend bool operator==(const Task&, const Task&) = default;
};

struct TaskSet {
    std::vector<Task> tasks;
    std::uint32_t processors{1};
    std::uint32_t resources{1};
    ReleaseModel release_model{ReleaseModel::FrameBased};
    // ticks per base period unit; serialization metadata, all stored times
    // are already in ticks
    Time resolution{1};

    friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

struct Violation {
    std::string message;
    std::optional<std::size_t> task;
    std::optional<std::size_t> segment;

    std::string to_string() const {
        std::ostringstream os;
        os << message;
        if (task) os << " (task " << *task;
        if (segment) os << ", segment " << *segment;
        if (task) os << ")";
        return os.str();
    }
};

// Returns every violated model invariant; an empty list means the set is valid.
inline std::vector<Violation> validate(const TaskSet& ts) {
    std::vector<Violation> out;
    if (ts.processors < 1)
        out.push_back({"processor count must be at least 1", {}, {}});
    if (ts.resources < 1)
        out.push_back({"resource count must be at least 1", {}, {}});
    if (ts.resolution < 1)
        out.push_back({"resolution denominator must be at least 1", {}, {}});

    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
        const Task& t = ts.tasks[i];
        if (t.period < 1)
            out.push_back({"period must be positive", i, {}});
        if (t.deadline < 0)
            out.push_back({"deadline must be non-negative", i, {}});
        if (t.deadline > t.period)
            out.push_back({"deadline exceeds period", i, {}});
        for (std::size_t j = 0; j < t.segments.size(); ++j) {
            const Segment& s = t.segments[j];
            if (s.is_critical()) {
                if (s.wcet <= 0)
                    out.push_back({"critical section must have positive wcet", i, j});
                if (*s.resource >= ts.resources)
                    out.push_back({"resource index out of range", i, j});
            } else {
                if (s.wcet <= 0)
                    out.push_back({"zero-length non-critical segment must be omitted", i, j});
            }
            if (j + 1 < t.segments.size() && !s.is_critical() &&
                !t.segments[j + 1].is_critical()) {
                std::ostringstream os;
                os << "adjacent non-critical segments at positions " << j << "," << (j + 1);
                out.push_back({os.str(), i, j});
            }
        }
    }

    if (ts.release_model == ReleaseModel::FrameBased && !ts.tasks.empty()) {
        const Time p0 = ts.tasks.front().period;
        const Time d0 = ts.tasks.front().deadline;
        for (std::size_t i = 1; i < ts.tasks.size(); ++i) {
            if (ts.tasks[i].period != p0)
                out.push_back({"frame-based set requires equal periods", i, {}});
            if (ts.tasks[i].deadline != d0)
                out.push_back({"frame-based set requires equal deadlines", i, {}});
        }
    }
    return out;
}

inline bool is_valid(const TaskSet& ts) { return validate(ts).empty(); }

// LCM of all periods, exact; throws overflow_error naming the offending product.
inline Time hyperperiod(const TaskSet& ts) {
    Time h = 1;
    for (const Task& t : ts.tasks) h = checked_lcm(h, t.period);
    return h;
}

inline Rational utilization(const Task& t) {
    if (t.period <= 0)
        throw std::invalid_argument("utilization requires a positive period");
    return Rational(t.total_wcet(), t.period);
}

inline Rational total_utilization(const TaskSet& ts) {
    Rational u(0);
    for (const Task& t : ts.tasks) u = u + utilization(t);
    return u;
}

inline std::size_t occurrences_in_hyperperiod(const TaskSet& ts, std::size_t task) {
    return static_cast<std::size_t>(hyperperiod(ts) / ts.tasks[task].period);
}

struct AccessPattern {
    enum Kind { FlowShopCompatible, JobShopOnly };
    Kind kind{JobShopOnly};
    // witness total order over resource indices, present iff flow-shop compatible
    std::vector<std::uint32_t> order;
};

// Flow-shop compatible iff every task accesses each resource at most once and
// the union of per-task access orders admits a total order over resources.
inline AccessPattern classify_access_pattern(const TaskSet& ts) {
    const std::uint32_t z = ts.resources;
    std::vector<std::vector<bool>> edge(z, std::vector<bool>(z, false));
    for (const Task& t : ts.tasks) {
        std::vector<std::uint32_t> seq;
        for (const Segment& s : t.segments)
            if (s.is_critical()) seq.push_back(*s.resource);
        std::vector<bool> seen(z, false);
        for (std::uint32_t r : seq) {
            if (seen[r]) return {AccessPattern::JobShopOnly, {}};
            seen[r] = true;
        }
        for (std::size_t a = 0; a < seq.size(); ++a)
            for (std::size_t b = a + 1; b < seq.size(); ++b)
                edge[seq[a]][seq[b]] = true;
    }

    // Kahn with smallest-index preference gives a deterministic witness.
    std::vector<std::uint32_t> indeg(z, 0);
    for (std::uint32_t a = 0; a < z; ++a)
        for (std::uint32_t b = 0; b < z; ++b)
            if (edge[a][b]) ++indeg[b];
    std::vector<std::uint32_t> order;
    std::vector<bool> placed(z, false);
    for (std::uint32_t step = 0; step < z; ++step) {
        std::uint32_t pick = z;
        for (std::uint32_t r = 0; r < z; ++r)
            if (!placed[r] && indeg[r] == 0) { pick = r; break; }
        if (pick == z) return {AccessPattern::JobShopOnly, {}};
        placed[pick] = true;
        order.push_back(pick);
        for (std::uint32_t b = 0; b < z; ++b)
            if (edge[pick][b]) --indeg[b];
    }
    return {AccessPattern::FlowShopCompatible, order};
}

// ---- canonical JSON serialization ----------------------------------------

inline nlohmann::json to_json(const TaskSet& ts) {
    nlohmann::json jtasks = nlohmann::json::array();
    for (const Task& t : ts.tasks) {
        nlohmann::json jsegs = nlohmann::json::array();
        for (const Segment& s : t.segments) {
            nlohmann::json js;
            js["wcet"] = s.wcet;
            if (s.resource)
                js["resource"] = *s.resource;
            else
                js["resource"] = nullptr;
            jsegs.push_back(js);
        }
        jtasks.push_back({{"period", t.period},
                          {"deadline", t.deadline},
                          {"segments", jsegs}});
    }
    return {{"processors", ts.processors},
            {"resources", ts.resources},
            {"release_model", ts.release_model == ReleaseModel::FrameBased ? "frame" : "periodic"},
            {"resolution_denominator", ts.resolution},
            {"tasks", jtasks}};
}

inline TaskSet taskset_from_json(const nlohmann::json& j) {
    TaskSet ts;
    ts.processors = j.at("processors").get<std::uint32_t>();
    ts.resources = j.at("resources").get<std::uint32_t>();
    const std::string rm = j.at("release_model").get<std::string>();
    if (rm == "frame")
        ts.release_model = ReleaseModel::FrameBased;
    else if (rm == "periodic")
        ts.release_model = ReleaseModel::PeriodicSynchronous;
    else
        throw std::invalid_argument("unknown release_model: " + rm);
    ts.resolution = j.at("resolution_denominator").get<Time>();
    for (const auto& jt : j.at("tasks")) {
        Task t;
        t.period = jt.at("period").get<Time>();
        t.deadline = jt.at("deadline").get<Time>();
        for (const auto& js : jt.at("segments")) {
            Segment s;
            s.wcet = js.at("wcet").get<Time>();
            if (!js.at("resource").is_null())
                s.resource = js.at("resource").get<std::uint32_t>();
            t.segments.push_back(s);
        }
        ts.tasks.push_back(std::move(t));
    }
    return ts;
}

}  // namespace dgsched
