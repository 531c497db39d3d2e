// seqtest: command-line front end for the sequential-testing toolkit.
//
// Exit codes: 0 ok, 2 invalid input, 3 size cap exceeded, 4 internal
// inconsistency (e.g. a bound violation in a sandwich report).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seqtest/harness.hpp"
#include "seqtest/io.hpp"
#include "seqtest/policies.hpp"
#include "seqtest/simulator.hpp"
#include "seqtest/solver_approx.hpp"
#include "seqtest/solver_exact.hpp"

namespace {

using namespace seqtest;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCap = 3;
constexpr int kExitInconsistent = 4;

struct GlobalOptions {
    std::string scenario;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    int workers = 1;
    std::string edge_visibility;
};

ScenarioConfig load(const GlobalOptions& g) {
    if (g.scenario.empty()) throw ValidationError("--scenario is required");
    ScenarioConfig cfg = load_scenario(g.scenario);
    if (g.seed_override) cfg.seed = *g.seed_override;
    if (g.edge_visibility == "before") cfg.edge_visibility = EdgeVisibility::before;
    if (g.edge_visibility == "after") cfg.edge_visibility = EdgeVisibility::after;
    return cfg;
}

std::string out_path(const GlobalOptions& g, const std::string& file) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / file).string();
}

// "1,2,0,3" -> plan; 0 means no test at that step.
OpenLoopPlan parse_plan(const std::string& text) {
    OpenLoopPlan plan;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            plan.steps.push_back(Action::test(std::stoi(item)));
        } catch (const std::logic_error&) {
            throw ValidationError("bad plan entry '" + item + "'");
        }
    }
    return plan;
}

GreedyMode parse_greedy_mode(const std::string& s) {
    if (s == "saving") return GreedyMode::saving;
    if (s == "literal") return GreedyMode::literal;
    throw ValidationError("greedy mode must be 'saving' or 'literal'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential testing on contact graphs: simulation, exact and approximate solvers, benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed_override = 0;
    app.add_option("--scenario", g.scenario, "Scenario file (JSON)");
    app.add_option("--out-dir", g.out_dir, "Directory for output files");
    auto* seed_opt = app.add_option("--seed-override", seed_override, "Replace the scenario seed");
    app.add_option("--workers", g.workers, "Monte Carlo worker threads")->check(CLI::PositiveNumber);
    app.add_option("--edge-visibility", g.edge_visibility, "Whether policies see the active edge before testing")
        ->check(CLI::IsMember({"before", "after"}));

    auto* validate = app.add_subcommand("validate", "Parse and validate a scenario, print its digest");

    auto* solve_exact = app.add_subcommand("solve-exact", "Exact alpha-vector solve; writes value_function.json");
    int max_n = SolverCaps{}.max_n, max_t = SolverCaps{}.max_t;
    solve_exact->add_option("--max-n", max_n, "Population cap");
    solve_exact->add_option("--max-t", max_t, "Horizon cap");

    auto* solve_approx = app.add_subcommand("solve-approx", "Grid upper and lower bounds; writes bounds.csv");
    std::size_t grid_points = 8;
    std::uint64_t grid_seed = 7;
    std::size_t probe_count = 8;
    solve_approx->add_option("--grid-points", grid_points, "Random interior grid points added to the corners");
    solve_approx->add_option("--grid-seed", grid_seed, "Seed of the random grid points");
    solve_approx->add_option("--probes", probe_count, "Random probe beliefs besides the initial belief");

    auto* sandwich_cmd = app.add_subcommand("sandwich", "Bounds over a ladder of nested grids; writes sandwich.csv");
    std::vector<std::size_t> ladder{2, 4, 8};
    sandwich_cmd->add_option("--ladder", ladder, "Interior grid sizes R")->delimiter(',');
    sandwich_cmd->add_option("--grid-seed", grid_seed, "Seed of the random grid points");
    sandwich_cmd->add_option("--probes", probe_count, "Random probe beliefs besides the initial belief");

    auto* bench = app.add_subcommand("bench", "Paired-seed Monte Carlo benchmark; writes bench.csv and bench_runs.csv");
    std::vector<std::string> policies = policy_names();
    int runs = 1000;
    std::string plan_text;
    std::string greedy_mode = "saving";
    bench->add_option("--policies", policies, "Policies to evaluate")->delimiter(',');
    bench->add_option("--runs", runs, "Episodes per policy")->check(CLI::PositiveNumber);
    bench->add_option("--plan", plan_text, "Open-loop plan, e.g. 1,2,3,0 (round robin by default)");
    bench->add_option("--greedy-mode", greedy_mode, "saving or literal");

    auto* trace = app.add_subcommand("trace", "Run one episode; writes trace.jsonl");
    std::string trace_policy = "greedy";
    int run_index = 0;
    trace->add_option("--policy", trace_policy, "Policy to run");
    trace->add_option("--run", run_index, "Episode index; its seed is the scenario seed plus this index")
        ->check(CLI::NonNegativeNumber);
    trace->add_option("--plan", plan_text, "Open-loop plan, e.g. 1,2,3,0");
    trace->add_option("--greedy-mode", greedy_mode, "saving or literal");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    if (*seed_opt) g.seed_override = seed_override;

    try {
        const ScenarioConfig cfg = load(g);
        PolicyOptions popts;
        if (!plan_text.empty()) popts.plan = parse_plan(plan_text);
        popts.greedy_mode = parse_greedy_mode(greedy_mode);

        if (*validate) {
            std::cout << "ok digest=" << scenario_digest(cfg) << " n=" << cfg.n << " horizon=" << cfg.horizon
                      << " seed=" << cfg.seed << "\n";
            return kExitOk;
        }

        if (*solve_exact) {
            SolverCaps caps;
            caps.max_n = max_n;
            caps.max_t = max_t;
            const ValueFunction vf = solve(cfg, caps);
            save_value_function(vf, out_path(g, "value_function.json"));
            std::string csv = "digest,seed,stage,vectors,value\n";
            const Belief& b0 = cfg.initial_belief;
            for (int t = 1; t <= cfg.horizon; ++t)
                csv += scenario_digest(cfg) + "," + std::to_string(cfg.seed) + "," + std::to_string(t) + "," +
                       std::to_string(vf.stage(t).vectors.size()) + "," +
                       detail::format_double(vf.value(t, QuarantineSet(cfg.n), b0)) + "\n";
            write_file(out_path(g, "solve_exact.csv"), csv);
            std::cout << "V_1(b0) = " << detail::format_double(vf.value(1, QuarantineSet(cfg.n), b0)) << "\n";
            return kExitOk;
        }

        if (*solve_approx || *sandwich_cmd) {
            ExperimentSpec spec;
            spec.scenario = cfg;
            spec.grid_seed = grid_seed;
            spec.random_probes = probe_count;
            spec.grid_ladder = *solve_approx ? std::vector<std::size_t>{grid_points} : ladder;
            const SandwichReport report = run_sandwich_report(spec);
            write_file(out_path(g, *solve_approx ? "bounds.csv" : "sandwich.csv"), sandwich_csv(report));
            if (*solve_approx) {
                const auto upper = approx_solve_upper(cfg, ladder_grid(cfg, grid_points, grid_seed), spec.approx_caps);
                save_value_function(upper, out_path(g, "upper_value_function.json"));
            }
            for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";
            if (!report.violations.empty()) return kExitInconsistent;
            std::cout << report.rows.size() << " rows, no violations\n";
            return kExitOk;
        }

        if (*bench) {
            ExperimentSpec spec;
            spec.scenario = cfg;
            spec.policies = policies;
            spec.n_runs = runs;
            spec.workers = g.workers;
            spec.policy_options = popts;
            const ResultTable table = run_benchmark(spec);
            write_file(out_path(g, "bench.csv"), bench_csv(table));
            write_file(out_path(g, "bench_runs.csv"), runs_csv(table));
            for (const auto& r : table.rows) {
                if (r.summary)
                    std::fprintf(stderr, "%-10s mean %.6f  (%.2fs)\n", r.policy.c_str(), r.summary->mean_cost,
                                 r.runtime_seconds);
                else
                    std::fprintf(stderr, "%-10s %s\n", r.policy.c_str(), r.error->c_str());
            }
            return kExitOk;
        }

        if (*trace) {
            const auto policy = make_policy(trace_policy, cfg, popts);
            const EpisodeTrace tr = run_episode(cfg, *policy, cfg.seed + static_cast<std::uint64_t>(run_index));
            write_file(out_path(g, "trace.jsonl"), trace_to_jsonl(tr, policy->name()));
            std::cout << "total cost " << detail::format_double(tr.total_cost) << ", tests " << tr.tests_used << "\n";
            return kExitOk;
        }
    } catch (const SizeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCap;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DimensionError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const CoverageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInconsistent;
    } catch (const ContractViolation& e) {
        std::cerr << "internal inconsistency: " << e.what() << "\n";
        return kExitInconsistent;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
