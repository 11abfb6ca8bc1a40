#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "dgsched/task_model.hpp"
#include "dgsched/time.hpp"

namespace dgsched {

struct GenConfig {
    std::uint32_t processors{4};
    std::uint32_t resources{4};
    std::uint32_t tasks_per_set{40};
    // target total utilization as a fraction of the processor count
    double utilization_fraction{1.0};
    double per_task_cap{0.5};
    double h_min{0.05};
    double h_max{0.10};
    std::uint32_t accesses_min{2};
    std::uint32_t accesses_max{5};
    ReleaseModel release_model{ReleaseModel::FrameBased};
    std::vector<Time> period_units{1, 2, 5, 10};  // periodic draws, in base units
    Time resolution{1'000'000};
    std::uint64_t seed{0};
    // draw the utilization profile at 100% of M and scale it down to the
    // target; keeps a fixed seed comparable across utilization levels
    bool scale_from_full{true};
};

inline GenConfig gen_config_from_json(const nlohmann::json& j) {
    GenConfig cfg;
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    opt("processors", cfg.processors);
    opt("resources", cfg.resources);
    opt("tasks_per_set", cfg.tasks_per_set);
    opt("utilization_fraction", cfg.utilization_fraction);
    opt("per_task_cap", cfg.per_task_cap);
    opt("h_min", cfg.h_min);
    opt("h_max", cfg.h_max);
    opt("accesses_min", cfg.accesses_min);
    opt("accesses_max", cfg.accesses_max);
    opt("resolution_denominator", cfg.resolution);
    opt("period_units", cfg.period_units);
    opt("seed", cfg.seed);
    if (j.contains("release_model")) {
        const std::string rm = j.at("release_model").get<std::string>();
        if (rm == "frame")
            cfg.release_model = ReleaseModel::FrameBased;
        else if (rm == "periodic")
            cfg.release_model = ReleaseModel::PeriodicSynchronous;
        else
            throw std::invalid_argument("unknown release_model: " + rm);
    }
    return cfg;
}

// Uniform sample from {x in (0, cap]^n : sum x = total}. Rejection from the
// uniform simplex; the forced corner total == n*cap is handled exactly.
inline std::vector<double> random_fixed_sum(std::size_t n, double total, double cap,
                                            std::mt19937_64& rng) {
    if (n == 0) {
        if (total > 0.0) throw std::invalid_argument("random_fixed_sum: no room for positive total");
        return {};
    }
    if (total > static_cast<double>(n) * cap + 1e-12)
        throw std::invalid_argument("random_fixed_sum: total exceeds n * cap");
    if (std::abs(total - static_cast<double>(n) * cap) <= 1e-12)
        return std::vector<double>(n, cap);

    std::exponential_distribution<double> exp1(1.0);
    std::vector<double> x(n);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = exp1(rng);
            s += x[i];
        }
        bool ok = s > 0.0;
        for (std::size_t i = 0; ok && i < n; ++i) {
            x[i] = x[i] / s * total;
            if (x[i] > cap) ok = false;
        }
        if (!ok) continue;
        // exact-sum renormalization: the last coordinate absorbs rounding
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) acc += x[i];
        x[n - 1] = total - acc;
        if (x[n - 1] <= 0.0 || x[n - 1] > cap) continue;
        return x;
    }
    // pathological corner (total extremely close to n*cap): fall back to the
    // center of the slice rather than looping forever
    return std::vector<double>(n, total / static_cast<double>(n));
}

// Standard UUniFast recursion; parts are positive and sum to total.
inline std::vector<double> uunifast_split(double total, std::size_t k, std::mt19937_64& rng) {
    if (k == 0) throw std::invalid_argument("uunifast_split: k must be at least 1");
    std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);
    std::vector<double> parts;
    parts.reserve(k);
    double sum = total;
    for (std::size_t i = 1; i < k; ++i) {
        const double next = sum * std::pow(uni(rng), 1.0 / static_cast<double>(k - i));
        parts.push_back(sum - next);
        sum = next;
    }
    parts.push_back(sum);
    // exact-sum renormalization against accumulated floating error
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) acc += parts[i];
    parts[k - 1] = total - acc;
    return parts;
}

namespace gen_detail {

// Largest-remainder rounding of `weights` to non-negative integers that sum
// to `target`, each within [min_per, cap_per]. Deterministic.
inline std::vector<Time> quantize(const std::vector<double>& weights, Time target, Time min_per,
                                  Time cap_per) {
    const std::size_t n = weights.size();
    if (target < min_per * static_cast<Time>(n))
        throw std::invalid_argument("quantize: target below the per-part minimum");
    if (cap_per >= 0 && target > cap_per * static_cast<Time>(n))
        throw std::invalid_argument("quantize: target above the per-part cap");

    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<Time> out(n, min_per);
    std::vector<std::pair<double, std::size_t>> rem(n);
    Time assigned = min_per * static_cast<Time>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double share = wsum > 0.0
                                 ? weights[i] / wsum * static_cast<double>(target)
                                 : static_cast<double>(target) / static_cast<double>(n);
        Time f = static_cast<Time>(std::floor(share));
        f = std::max(f, min_per);
        if (cap_per >= 0) f = std::min(f, cap_per);
        assigned += f - out[i];
        out[i] = f;
        rem[i] = {share - std::floor(share), i};
    }
    // distribute the residue one tick at a time, largest remainder first
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    Time residue = target - assigned;
    std::size_t k = 0;
    while (residue != 0) {
        const std::size_t i = rem[k % n].second;
        if (residue > 0) {
            if (cap_per < 0 || out[i] < cap_per) {
                ++out[i];
                --residue;
            }
        } else {
            if (out[i] > min_per) {
                --out[i];
                ++residue;
            }
        }
        ++k;
        if (k > 4 * n * static_cast<std::size_t>(std::abs(residue) + 1) && residue != 0)
            throw std::logic_error("quantize failed to settle");
    }
    return out;
}

}  // namespace gen_detail

// Synthesizes one task set: RandomFixedSum utilizations, per-task critical
// section counts and fractions, UUniFast segment splits, exact quantization
// to the resolution grid. Two independent RNG streams keep the structural
// draws identical across utilization levels for a fixed seed.
inline TaskSet generate_taskset(const GenConfig& cfg) {
    if (cfg.tasks_per_set < cfg.processors)
        throw std::invalid_argument("generate_taskset: fewer tasks than processors");
    if (cfg.accesses_min < 1 || cfg.accesses_max < cfg.accesses_min)
        throw std::invalid_argument("generate_taskset: bad access count range");
    if (cfg.h_min <= 0.0 || cfg.h_max > 1.0 || cfg.h_max < cfg.h_min)
        throw std::invalid_argument("generate_taskset: bad critical-section fraction range");

    std::mt19937_64 util_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 struct_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);

    const std::size_t n = cfg.tasks_per_set;
    const Time res = cfg.resolution;

    TaskSet ts;
    ts.processors = cfg.processors;
    ts.resources = cfg.resources;
    ts.release_model = cfg.release_model;
    ts.resolution = res;

    // structural draws (fixed across levels for one seed)
    std::uniform_int_distribution<std::uint32_t> cs_count_dist(cfg.accesses_min, cfg.accesses_max);
    std::uniform_real_distribution<double> h_dist(cfg.h_min, cfg.h_max);
    std::uniform_int_distribution<std::uint32_t> res_dist(0, cfg.resources - 1);
    std::vector<std::uint32_t> num_cs(n);
    std::vector<double> h_frac(n);
    std::vector<std::vector<std::uint32_t>> cs_resource(n);
    std::vector<Time> period_unit(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        num_cs[i] = cs_count_dist(struct_rng);
        h_frac[i] = h_dist(struct_rng);
        for (std::uint32_t k = 0; k < num_cs[i]; ++k)
            cs_resource[i].push_back(res_dist(struct_rng));
        if (cfg.release_model == ReleaseModel::PeriodicSynchronous) {
            std::uniform_int_distribution<std::size_t> p_dist(0, cfg.period_units.size() - 1);
            period_unit[i] = cfg.period_units[p_dist(struct_rng)];
        }
    }

    // utilizations, in micro-units of 1/res so that U_i * T_i is integral
    const double full_total = static_cast<double>(cfg.processors);
    const double level = cfg.utilization_fraction;
    std::vector<double> u = cfg.scale_from_full
                                ? random_fixed_sum(n, full_total, cfg.per_task_cap, util_rng)
                                : random_fixed_sum(n, full_total * level,
                                                   std::min(cfg.per_task_cap,
                                                            full_total * level),
                                                   util_rng);
    if (cfg.scale_from_full)
        for (double& v : u) v *= level;

    Time u_target = static_cast<Time>(std::llround(level * full_total * static_cast<double>(res)));
    const Time u_cap = static_cast<Time>(
        std::llround(cfg.per_task_cap * static_cast<double>(res)));
    // per-task floor: enough ticks for every segment to be at least one tick
    std::vector<Time> q_min(n);
    Time q_min_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Time eta = 2 * static_cast<Time>(num_cs[i]) + 1;
        q_min[i] = (eta + period_unit[i] - 1) / period_unit[i];
        q_min_sum += q_min[i];
    }
    if (u_target < q_min_sum) u_target = q_min_sum;  // degenerate near-zero level
    if (u_target > u_cap * static_cast<Time>(n))
        throw std::invalid_argument("generate_taskset: target utilization exceeds the cap");

    std::vector<Time> q(n);
    {
        // reuse the largest-remainder machinery with per-task floors
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = u[i];
        q = gen_detail::quantize(scaled, u_target, 0, u_cap);
        // enforce floors by shifting ticks from the largest entries
        for (std::size_t i = 0; i < n; ++i) {
            while (q[i] < q_min[i]) {
                std::size_t donor = n;
                for (std::size_t j2 = 0; j2 < n; ++j2)
                    if (q[j2] > q_min[j2] && (donor == n || q[j2] > q[donor])) donor = j2;
                if (donor == n) throw std::logic_error("generate_taskset: floors infeasible");
                --q[donor];
                ++q[i];
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        Task t;
        t.period = checked_mul(period_unit[i], res);
        t.deadline = t.period;
        const Time c_total = checked_mul(q[i], period_unit[i]);  // exact U_i = q_i / res

        const std::uint32_t k_cs = num_cs[i];
        const Time cs_floor = k_cs;
        const Time nc_floor = k_cs + 1;
        Time cs_total = static_cast<Time>(std::llround(h_frac[i] * static_cast<double>(c_total)));
        cs_total = std::max(cs_total, cs_floor);
        cs_total = std::min(cs_total, c_total - nc_floor);
        const Time nc_total = c_total - cs_total;

        // split both sides; re-split when a segment would round away
        std::vector<Time> cs_ticks, nc_ticks;
        bool split_ok = false;
        for (int attempt = 0; attempt < 8 && !split_ok; ++attempt) {
            const auto cs_parts = uunifast_split(static_cast<double>(cs_total), k_cs, struct_rng);
            const auto nc_parts =
                uunifast_split(static_cast<double>(nc_total), k_cs + 1, struct_rng);
            try {
                cs_ticks = gen_detail::quantize(cs_parts, cs_total, 1, -1);
                nc_ticks = gen_detail::quantize(nc_parts, nc_total, 1, -1);
                split_ok = true;
            } catch (const std::invalid_argument&) {
                // retry with fresh draws
            }
        }
        if (!split_ok)
            throw std::runtime_error("generate_taskset: segment quantization underflow");

        for (std::uint32_t k = 0; k < k_cs; ++k) {
            t.segments.push_back({nc_ticks[k], std::nullopt});
            t.segments.push_back({cs_ticks[k], cs_resource[i][k]});
        }
        t.segments.push_back({nc_ticks[k_cs], std::nullopt});
        ts.tasks.push_back(std::move(t));
    }
    return ts;
}

}  // namespace dgsched
