// Command-line front end: generate task sets, reduce them to shop instances,
// solve, build dependency graphs, simulate schedules, export runtime tables
// and run acceptance-ratio sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "dgsched/dgsched.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

dgsched::TaskSet load_taskset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return dgsched::taskset_from_json(j);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

// --solver forms: "dispatch:mwr|lpt|edf|fifo", "ls:<budget>", "exact:<nodes>,<seconds>"
dgsched::SolverChoice parse_solver(const std::string& text) {
    dgsched::SolverChoice c;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto rule_of = [](const std::string& r) {
        if (r == "mwr" || r.empty()) return dgsched::DispatchRule::MostWorkRemaining;
        if (r == "lpt") return dgsched::DispatchRule::LongestProcessingTime;
        if (r == "edf") return dgsched::DispatchRule::EarliestDeadlineFirst;
        if (r == "fifo") return dgsched::DispatchRule::FirstInFirstOut;
        throw CLI::ValidationError("--solver", "unknown dispatch rule: " + r);
    };
    if (head == "dispatch") {
        c.kind = dgsched::SolverChoice::Dispatch;
        c.rule = rule_of(rest);
    } else if (head == "ls") {
        c.kind = dgsched::SolverChoice::LocalSearch;
        if (!rest.empty()) c.budget = std::stoull(rest);
    } else if (head == "exact") {
        c.kind = dgsched::SolverChoice::Exact;
        if (!rest.empty()) {
            const auto comma = rest.find(',');
            c.limits.max_nodes = std::stoull(rest.substr(0, comma));
            if (comma != std::string::npos)
                c.limits.max_seconds = std::stod(rest.substr(comma + 1));
        }
    } else {
        throw CLI::ValidationError("--solver", "expected dispatch:…, ls:… or exact:…");
    }
    return c;
}

dgsched::ReductionKind reduction_for(const dgsched::TaskSet& ts, const std::string& name) {
    if (name == "frame") return dgsched::ReductionKind::FrameBased;
    if (name == "delays") return dgsched::ReductionKind::WithDelays;
    if (name == "periodic") return dgsched::ReductionKind::Periodic;
    // auto: follow the release model
    return ts.release_model == dgsched::ReleaseModel::FrameBased
               ? dgsched::ReductionKind::FrameBased
               : dgsched::ReductionKind::Periodic;
}

int report_violations(const dgsched::TaskSet& ts) {
    const auto violations = dgsched::validate(ts);
    if (violations.empty()) {
        std::cout << "valid\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cout << v.to_string() << "\n";
    return kExitValidation;
}

// generator flags shared by `generate` and `sweep`; a --config file provides
// the base values and explicit flags override it
struct GenFlags {
    dgsched::GenConfig values;
    std::string release_name = "frame";
    std::uint32_t tasks = 0;
    std::string config_path;
    CLI::Option* o_m = nullptr;
    CLI::Option* o_z = nullptr;
    CLI::Option* o_tasks = nullptr;
    CLI::Option* o_util = nullptr;
    CLI::Option* o_hmin = nullptr;
    CLI::Option* o_hmax = nullptr;
    CLI::Option* o_amin = nullptr;
    CLI::Option* o_amax = nullptr;
    CLI::Option* o_release = nullptr;
    CLI::Option* o_res = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "generator config JSON");
        o_m = cmd->add_option("--m", values.processors, "processor count");
        o_z = cmd->add_option("--z", values.resources, "resource count");
        o_tasks = cmd->add_option("--tasks", tasks, "tasks per set (default 10*M)");
        o_util = cmd->add_option("--util-frac", values.utilization_fraction,
                                 "target total utilization as a fraction of M");
        o_hmin = cmd->add_option("--h-min", values.h_min, "critical-section fraction lower bound");
        o_hmax = cmd->add_option("--h-max", values.h_max, "critical-section fraction upper bound");
        o_amin = cmd->add_option("--accesses-min", values.accesses_min,
                                 "min critical sections per task");
        o_amax = cmd->add_option("--accesses-max", values.accesses_max,
                                 "max critical sections per task");
        o_release = cmd->add_option("--release", release_name, "frame|periodic");
        o_res = cmd->add_option("--resolution", values.resolution, "ticks per base period unit");
    }

    dgsched::GenConfig resolve() const {
        dgsched::GenConfig cfg = values;
        bool tasks_in_config = false;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open " + config_path);
            nlohmann::json j;
            in >> j;
            cfg = dgsched::gen_config_from_json(j);
            tasks_in_config = j.contains("tasks_per_set");
            if (o_m->count()) cfg.processors = values.processors;
            if (o_z->count()) cfg.resources = values.resources;
            if (o_util->count()) cfg.utilization_fraction = values.utilization_fraction;
            if (o_hmin->count()) cfg.h_min = values.h_min;
            if (o_hmax->count()) cfg.h_max = values.h_max;
            if (o_amin->count()) cfg.accesses_min = values.accesses_min;
            if (o_amax->count()) cfg.accesses_max = values.accesses_max;
            if (o_res->count()) cfg.resolution = values.resolution;
        }
        if (o_release->count() || config_path.empty())
            cfg.release_model = release_name == "periodic"
                                    ? dgsched::ReleaseModel::PeriodicSynchronous
                                    : dgsched::ReleaseModel::FrameBased;
        if (o_tasks->count() && tasks)
            cfg.tasks_per_set = tasks;
        else if (!tasks_in_config)
            cfg.tasks_per_set = 10 * cfg.processors;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dependency-graph scheduling toolkit"};
    app.require_subcommand(1);

    // shared flags
    std::string in_path, out_path = ".", config_path;
    std::uint64_t seed = 1;
    std::string policy_name = "ledf", cs_mode_name = "p", solver_text = "ls:2000";
    std::string reduction_name = "auto";
    std::uint32_t jobs = 1;

    // ---- generate ----
    auto* cmd_gen = app.add_subcommand("generate", "synthesize a task set (JSON to --out)");
    GenFlags gen_flags;
    std::uint32_t replicates = 1;
    gen_flags.attach(cmd_gen);
    cmd_gen->add_option("--replicates", replicates, "number of sets to emit");
    cmd_gen->add_option("--seed", seed, "master seed");
    cmd_gen->add_option("--out", out_path, "output file or directory");

    // ---- validate ----
    auto* cmd_val = app.add_subcommand("validate", "check a task set against the model");
    cmd_val->add_option("--in", in_path, "task set JSON")->required();

    // ---- reduce ----
    auto* cmd_red = app.add_subcommand("reduce", "emit the job-shop instance JSON");
    cmd_red->add_option("--in", in_path, "task set JSON")->required();
    cmd_red->add_option("--reduction", reduction_name, "frame|delays|periodic|auto");
    cmd_red->add_option("--out", out_path, "output file");

    // ---- solve ----
    auto* cmd_solve = app.add_subcommand("solve", "solve the shop instance, print objective");
    cmd_solve->add_option("--in", in_path, "task set JSON")->required();
    cmd_solve->add_option("--reduction", reduction_name, "frame|delays|periodic|auto");
    cmd_solve->add_option("--solver", solver_text, "dispatch:RULE | ls:BUDGET | exact:NODES,SECS");
    cmd_solve->add_option("--seed", seed, "solver seed");
    std::string dot_path;
    cmd_solve->add_option("--dot", dot_path, "write the disjunctive graph as DOT");

    // ---- graph ----
    auto* cmd_graph = app.add_subcommand("graph", "build the dependency graph, write DOT");
    cmd_graph->add_option("--in", in_path, "task set JSON")->required();
    cmd_graph->add_option("--reduction", reduction_name, "frame|delays|periodic|auto");
    cmd_graph->add_option("--solver", solver_text, "solver for the shop step");
    cmd_graph->add_option("--seed", seed, "solver seed");
    cmd_graph->add_option("--out", out_path, "output DOT file");

    // ---- schedule ----
    auto* cmd_sched = app.add_subcommand("schedule", "simulate, print verdict, write trace CSV");
    cmd_sched->add_option("--in", in_path, "task set JSON")->required();
    cmd_sched->add_option("--reduction", reduction_name, "frame|delays|periodic|auto");
    cmd_sched->add_option("--solver", solver_text, "solver for the shop step");
    cmd_sched->add_option("--policy", policy_name, "ledf|pedf");
    cmd_sched->add_option("--cs-mode", cs_mode_name, "p|np");
    cmd_sched->add_option("--seed", seed, "solver seed");
    std::string trace_path;
    cmd_sched->add_option("--out", trace_path, "trace CSV file");

    // ---- tickets ----
    auto* cmd_tickets = app.add_subcommand("tickets", "export the runtime ticket table JSON");
    cmd_tickets->add_option("--in", in_path, "task set JSON")->required();
    cmd_tickets->add_option("--reduction", reduction_name, "frame|delays|periodic|auto");
    cmd_tickets->add_option("--solver", solver_text, "solver for the shop step");
    cmd_tickets->add_option("--seed", seed, "solver seed");
    cmd_tickets->add_option("--out", out_path, "output file");

    // ---- sweep ----
    auto* cmd_sweep = app.add_subcommand("sweep", "acceptance-ratio sweep over utilization levels");
    GenFlags sweep_flags;
    std::string levels_text = "0:100:5";
    std::uint32_t sweep_replicates = 100;
    sweep_flags.attach(cmd_sweep);
    cmd_sweep->add_option("--levels", levels_text, "lo:hi:step in percent of M");
    cmd_sweep->add_option("--replicates", sweep_replicates, "replicates per level");
    cmd_sweep->add_option("--policy", policy_name, "ledf|pedf");
    cmd_sweep->add_option("--cs-mode", cs_mode_name, "p|np");
    cmd_sweep->add_option("--solver", solver_text, "solver for the shop step");
    cmd_sweep->add_option("--seed", seed, "master seed");
    cmd_sweep->add_option("--jobs", jobs, "worker count");
    cmd_sweep->add_option("--out", out_path, "output directory");

    // ---- oracle-corpus ----
    auto* cmd_corpus = app.add_subcommand("oracle-corpus",
                                          "regenerate the brute-force oracle corpus");
    std::uint32_t corpus_count = 50;
    cmd_corpus->add_option("--count", corpus_count, "instances");
    cmd_corpus->add_option("--seed", seed, "corpus seed");
    cmd_corpus->add_option("--out", out_path, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_gen) {
            dgsched::GenConfig gen = gen_flags.resolve();
            namespace fs = std::filesystem;
            for (std::uint32_t r = 0; r < replicates; ++r) {
                gen.seed = dgsched::replicate_seed(seed, r);
                const dgsched::TaskSet ts = dgsched::generate_taskset(gen);
                std::string path = out_path;
                if (replicates > 1 || fs::is_directory(out_path)) {
                    fs::create_directories(out_path);
                    std::ostringstream name;
                    name << "taskset_seed" << gen.seed << ".json";
                    path = (fs::path(out_path) / name.str()).string();
                }
                write_file(path, dgsched::to_json(ts).dump(2) + "\n");
                std::cout << path << "\n";
            }
            return kExitOk;
        }

        if (*cmd_val) {
            return report_violations(load_taskset(in_path));
        }

        if (*cmd_red) {
            const dgsched::TaskSet ts = load_taskset(in_path);
            if (!dgsched::is_valid(ts)) return report_violations(ts);
            dgsched::PipelineOptions opt;
            opt.reduction = reduction_for(ts, reduction_name);
            dgsched::JobShopInstance inst;
            switch (opt.reduction) {
                case dgsched::ReductionKind::FrameBased:
                    inst = dgsched::reduce_frame_based(ts);
                    break;
                case dgsched::ReductionKind::WithDelays:
                    inst = dgsched::reduce_with_delays(ts);
                    break;
                case dgsched::ReductionKind::Periodic:
                    inst = dgsched::reduce_periodic(ts);
                    break;
            }
            const std::string payload = dgsched::instance_to_json(inst).dump(2) + "\n";
            if (out_path == ".")
                std::cout << payload;
            else
                write_file(out_path, payload);
            return kExitOk;
        }

        auto run = [&](const dgsched::TaskSet& ts) {
            dgsched::PipelineOptions opt;
            opt.reduction = reduction_for(ts, reduction_name);
            opt.solver = parse_solver(solver_text);
            opt.solver.seed = seed;
            opt.policy = policy_name == "pedf" ? dgsched::Policy::PartitionedEdf
                                               : dgsched::Policy::ListEdf;
            opt.cs_mode = cs_mode_name == "np" ? dgsched::CsMode::NonPreemptiveCS
                                               : dgsched::CsMode::PreemptiveCS;
            return dgsched::run_pipeline(ts, opt);
        };

        if (*cmd_solve) {
            const dgsched::TaskSet ts = load_taskset(in_path);
            if (!dgsched::is_valid(ts)) return report_violations(ts);
            const auto pr = run(ts);
            if (!dot_path.empty())
                write_file(dot_path, dgsched::disjunctive_graph_dot(pr.instance));
            std::cout << "objective " << pr.row.shop_objective << "\nstatus "
                      << (pr.row.solver_status == dgsched::RowSolverStatus::Optimal
                              ? "optimal"
                              : pr.row.solver_status == dgsched::RowSolverStatus::Incumbent
                                    ? "incumbent"
                                    : "heuristic")
                      << "\n";
            return kExitOk;
        }

        if (*cmd_graph) {
            const dgsched::TaskSet ts = load_taskset(in_path);
            if (!dgsched::is_valid(ts)) return report_violations(ts);
            const auto pr = run(ts);
            const std::string dot = dgsched::graph_dot(pr.graph);
            if (out_path == ".")
                std::cout << dot;
            else
                write_file(out_path, dot);
            std::cout << "critical_path " << pr.row.len_g << "\n";
            return kExitOk;
        }

        if (*cmd_sched) {
            const dgsched::TaskSet ts = load_taskset(in_path);
            if (!dgsched::is_valid(ts)) return report_violations(ts);
            const auto pr = run(ts);
            if (!trace_path.empty())
                write_file(trace_path, dgsched::trace_csv(ts, pr.graph, pr.schedule));
            std::cout << (pr.row.schedulable ? "schedulable" : "not schedulable") << "\n"
                      << (ts.release_model == dgsched::ReleaseModel::FrameBased ? "makespan "
                                                                                : "max_lateness ")
                      << pr.row.objective_value << "\n";
            return kExitOk;
        }

        if (*cmd_tickets) {
            const dgsched::TaskSet ts = load_taskset(in_path);
            if (!dgsched::is_valid(ts)) return report_violations(ts);
            const auto pr = run(ts);
            const auto table = dgsched::build_ticket_table(ts, pr.graph);
            const std::string payload = dgsched::ticket_table_to_json(table).dump(2) + "\n";
            if (out_path == ".")
                std::cout << payload;
            else
                write_file(out_path, payload);
            return kExitOk;
        }

        if (*cmd_sweep) {
            dgsched::SweepConfig sc;
            sc.gen = sweep_flags.resolve();
            int lo = 0, hi = 100, step = 5;
            if (std::sscanf(levels_text.c_str(), "%d:%d:%d", &lo, &hi, &step) != 3 || step <= 0)
                throw CLI::ValidationError("--levels", "expected lo:hi:step");
            for (int v = lo; v <= hi; v += step)
                sc.levels.push_back(static_cast<double>(v) / 100.0);
            sc.replicates = sweep_replicates;
            sc.master_seed = seed;
            sc.workers = jobs;
            sc.options.reduction = sc.gen.release_model == dgsched::ReleaseModel::FrameBased
                                       ? dgsched::ReductionKind::FrameBased
                                       : dgsched::ReductionKind::Periodic;
            sc.options.solver = parse_solver(solver_text);
            sc.options.policy = policy_name == "pedf" ? dgsched::Policy::PartitionedEdf
                                                      : dgsched::Policy::ListEdf;
            sc.options.cs_mode = cs_mode_name == "np" ? dgsched::CsMode::NonPreemptiveCS
                                                      : dgsched::CsMode::PreemptiveCS;

            const auto rows = dgsched::acceptance_sweep(sc);
            namespace fs = std::filesystem;
            fs::create_directories(out_path);
            write_file((fs::path(out_path) / "results.csv").string(), dgsched::results_csv(rows));
            write_file((fs::path(out_path) / "manifest.json").string(),
                       dgsched::sweep_manifest(sc).dump(2) + "\n");
            std::cout << dgsched::results_csv(rows);
            return kExitOk;
        }

        if (*cmd_corpus) {
            const auto corpus = dgsched::make_oracle_corpus(corpus_count, seed);
            const std::string payload = dgsched::corpus_to_json(corpus).dump(2) + "\n";
            if (out_path == ".")
                std::cout << payload;
            else
                write_file(out_path, payload);
            return kExitOk;
        }
    } catch (const dgsched::pipeline_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitOk;
}
