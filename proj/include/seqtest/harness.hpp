#pragma once

// Experiment runner: paired-seed policy benchmarks and bound reports, written
// as CSV tables. Every row carries the scenario digest and a seed so single
// episodes can be replayed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/io.hpp"
#include "seqtest/oracle.hpp"
#include "seqtest/policies.hpp"
#include "seqtest/scenario.hpp"
#include "seqtest/simulator.hpp"
#include "seqtest/solver_approx.hpp"
#include "seqtest/solver_exact.hpp"

namespace seqtest {

struct ExperimentSpec {
    ScenarioConfig scenario;
    std::vector<std::string> policies{"never", "random", "open_loop", "improved", "greedy", "lookahead", "exact"};
    int n_runs = 1000;
    // Run k uses seed base_seed + k; defaults to the scenario seed.
    std::optional<std::uint64_t> base_seed;
    int workers = 1;
    PolicyOptions policy_options{};
    // Probe beliefs for bound reports; the initial belief plus random ones when empty.
    std::vector<Belief> probes;
    std::size_t random_probes = 8;
    // Interior grid points added to the corners, one grid per entry. Grids are
    // nested: a larger R extends the smaller grid's points.
    std::vector<std::size_t> grid_ladder{2, 4, 8};
    std::uint64_t grid_seed = 7;
    ApproxCaps approx_caps{};
    OracleCaps oracle_caps{};

    std::uint64_t seed() const { return base_seed.value_or(scenario.seed); }

    void validate() const {
        scenario.validate();
        if (n_runs < 1) throw ValidationError("n_runs must be >= 1");
        if (workers < 1) throw ValidationError("workers must be >= 1");
        if (policies.empty()) throw ValidationError("at least one policy is required");
        const auto& known = policy_names();
        for (const auto& p : policies)
            if (std::find(known.begin(), known.end(), p) == known.end())
                throw ValidationError("unknown policy '" + p + "'");
        for (std::size_t k = 1; k < grid_ladder.size(); ++k)
            if (grid_ladder[k] < grid_ladder[k - 1]) throw ValidationError("grid ladder must be non-decreasing");
        for (const auto& b : probes)
            if (b.size() != scenario.n) throw ValidationError("probe belief dimension differs from n");
    }
};

struct ResultRow {
    std::string policy;
    std::optional<MonteCarloSummary> summary;
    double runtime_seconds = 0.0;
    // Set when the policy could not be built (e.g. solver caps).
    std::optional<std::string> error;
};

struct ResultTable {
    std::string digest;
    std::uint64_t base_seed = 0;
    int n_runs = 0;
    std::vector<ResultRow> rows;

    const ResultRow& row(const std::string& policy) const {
        for (const auto& r : rows)
            if (r.policy == policy) return r;
        throw ContractViolation("no row for policy '" + policy + "'");
    }
};

inline ResultTable run_benchmark(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable table{scenario_digest(spec.scenario), spec.seed(), spec.n_runs, {}};
    for (const auto& name : spec.policies) {
        ResultRow row{name, std::nullopt, 0.0, std::nullopt};
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto policy = make_policy(name, spec.scenario, spec.policy_options);
            row.summary = monte_carlo_eval(spec.scenario, *policy, spec.n_runs, spec.seed(), spec.workers);
        } catch (const SizeError& e) {
            row.error = std::string("cap exceeded: ") + e.what();
        }
        row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline constexpr const char* kBenchHeader =
    "digest,seed,policy,runs,mean_cost,std_error,mean_tests_used,mean_final_infections,status";
inline constexpr const char* kRunsHeader = "digest,seed,policy,run,cost,tests_used,final_infections";

// Summary table; runtimes are left out so that files are reproducible.
inline std::string bench_csv(const ResultTable& table) {
    std::string out = std::string(kBenchHeader) + "\n";
    const std::string prefix = table.digest + "," + std::to_string(table.base_seed) + ",";
    for (const auto& r : table.rows) {
        out += prefix + r.policy + "," + std::to_string(table.n_runs) + ",";
        if (r.summary) {
            const auto& s = *r.summary;
            out += detail::format_double(s.mean_cost) + "," +
                   (s.std_error ? detail::format_double(*s.std_error) : std::string()) + "," +
                   detail::format_double(s.mean_tests_used) + "," + detail::format_double(s.mean_final_infections) +
                   ",ok\n";
        } else {
            std::string msg = r.error.value_or("error");
            std::replace(msg.begin(), msg.end(), ',', ';');
            out += ",,,," + msg + "\n";
        }
    }
    return out;
}

// One row per episode; the seed column is that episode's seed.
inline std::string runs_csv(const ResultTable& table) {
    std::string out = std::string(kRunsHeader) + "\n";
    for (const auto& r : table.rows) {
        if (!r.summary) continue;
        const auto& s = *r.summary;
        for (int k = 0; k < s.runs; ++k) {
            const auto idx = static_cast<std::size_t>(k);
            out += table.digest + "," + std::to_string(s.base_seed + static_cast<std::uint64_t>(k)) + "," + r.policy +
                   "," + std::to_string(k) + "," + detail::format_double(s.costs[idx]) + "," +
                   std::to_string(s.tests_used[idx]) + "," + std::to_string(s.final_infections[idx]) + "\n";
        }
    }
    return out;
}

// The initial belief followed by `count` random beliefs over the states it can
// reach.
inline std::vector<Belief> default_probes(const ScenarioConfig& cfg, std::size_t count, std::uint64_t seed) {
    std::vector<Belief> probes{cfg.initial_belief};
    const auto states = upward_closure(cfg.n, support_states({cfg.initial_belief}));
    for (auto& b : random_grid(cfg.n, states, count, seed).points) probes.push_back(std::move(b));
    return probes;
}

// Corners of the reachable support plus `interior` seeded random points. The
// random points for a smaller count are a prefix of those for a larger one.
inline BeliefGrid ladder_grid(const ScenarioConfig& cfg, std::size_t interior, std::uint64_t seed) {
    BeliefGrid g = default_grid(cfg.n, {cfg.initial_belief}, interior, seed);
    g.descriptor = "corner+random(" + std::to_string(interior) + ",seed=" + std::to_string(seed) + ")";
    return g;
}

struct SandwichRow {
    std::size_t grid_points = 0;  // R
    std::size_t grid_size = 0;    // corners included
    int t = 1;
    std::size_t probe = 0;
    std::optional<double> lower;  // absent when the probe is outside the grid's hull
    double upper = 0.0;
    std::optional<double> gap;
    std::optional<double> oracle;
    bool tight = false;
};

struct SandwichReport {
    std::string digest;
    std::uint64_t seed = 0;
    std::vector<SandwichRow> rows;
    // Human-readable descriptions of bound violations or gaps growing with R.
    std::vector<std::string> violations;
    bool oracle_available = false;
};

inline SandwichReport run_sandwich_report(const ExperimentSpec& spec) {
    spec.validate();
    const ScenarioConfig& cfg = spec.scenario;
    check_approx_caps(cfg, spec.approx_caps);
    const auto probes = spec.probes.empty() ? default_probes(cfg, spec.random_probes, spec.grid_seed + 1) : spec.probes;
    SandwichReport report{scenario_digest(cfg), spec.grid_seed, {}, {}, false};
    const QuarantineSet empty(cfg.n);

    std::map<std::pair<int, std::size_t>, double> oracle;
    const double nodes = std::pow(2.0 * cfg.n + 1.0, cfg.horizon - 1);
    report.oracle_available = nodes <= spec.oracle_caps.max_nodes;
    if (report.oracle_available)
        for (int t = 1; t <= cfg.horizon; ++t)
            for (std::size_t k = 0; k < probes.size(); ++k)
                oracle[{t, k}] = oracle_value(cfg, probes[k], t, empty, spec.oracle_caps);

    std::map<std::pair<int, std::size_t>, double> previous_gap;
    for (std::size_t r : spec.grid_ladder) {
        const BeliefGrid grid = ladder_grid(cfg, r, spec.grid_seed);
        const ValueFunction upper = approx_solve_upper(cfg, grid, spec.approx_caps);
        const LowerBound lower = approx_solve_lower(cfg, grid, spec.approx_caps);
        for (int t = 1; t <= cfg.horizon; ++t)
            for (std::size_t k = 0; k < probes.size(); ++k) {
                SandwichRow row;
                row.grid_points = r;
                row.grid_size = grid.size();
                row.t = t;
                row.probe = k;
                row.upper = upper.value(t, empty, probes[k]);
                try {
                    row.lower = lower.value(t, empty, probes[k]);
                } catch (const CoverageError&) {
                }
                const std::string where =
                    "R=" + std::to_string(r) + " t=" + std::to_string(t) + " probe=" + std::to_string(k);
                if (row.lower) {
                    row.gap = row.upper - *row.lower;
                    row.tight = *row.gap < kTightGap;
                    if (*row.lower > row.upper + 1e-9) report.violations.push_back(where + ": lower above upper");
                    auto prev = previous_gap.find({t, k});
                    if (prev != previous_gap.end() && *row.gap > prev->second + 1e-9)
                        report.violations.push_back(where + ": gap grew with R");
                    previous_gap[{t, k}] = *row.gap;
                }
                if (report.oracle_available) {
                    row.oracle = oracle.at({t, k});
                    if (*row.oracle > row.upper + 1e-9) report.violations.push_back(where + ": oracle above upper");
                    if (row.lower && *row.lower > *row.oracle + 1e-9)
                        report.violations.push_back(where + ": lower above oracle");
                }
                report.rows.push_back(row);
            }
    }
    return report;
}

inline constexpr const char* kSandwichHeader = "digest,seed,R,grid_size,stage,probe,lower,upper,gap,oracle,tight,status";

inline std::string sandwich_csv(const SandwichReport& report) {
    std::string out = std::string(kSandwichHeader) + "\n";
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); };
    for (const auto& r : report.rows) {
        out += report.digest + "," + std::to_string(report.seed) + "," + std::to_string(r.grid_points) + "," +
               std::to_string(r.grid_size) + "," + std::to_string(r.t) + "," + std::to_string(r.probe) + "," +
               opt(r.lower) + "," + detail::format_double(r.upper) + "," + opt(r.gap) + "," + opt(r.oracle) + "," +
               (r.tight ? "1" : "0") + "," + (r.lower ? "ok" : "coverage") + "\n";
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

}  // namespace seqtest
