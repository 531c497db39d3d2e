#pragma once

// Ground-truth episodes: hidden-state evolution, testing, quarantine and cost
// accounting, plus seeded Monte Carlo evaluation.
//
// Step order: (1) draw the active edge from the subgraph outside the current
// quarantine set, (2) the policy chooses a test, (3) a positive test quarantines
// the individual at once, (4) stage cost on the current state, (5) transmission
// along the active edge unless an endpoint is now quarantined.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/model.hpp"
#include "seqtest/policy.hpp"
#include "seqtest/rng.hpp"
#include "seqtest/scenario.hpp"

namespace seqtest {

struct StepRecord {
    int t = 1;
    std::optional<Edge> active_edge;
    Action action;
    Observation observation = Observation::none;
    QuarantineSet quarantine_after;
    SystemState true_state;
    double stage_cost = 0.0;
    bool transmitted = false;
};

struct EpisodeTrace {
    std::string digest;
    std::uint64_t seed = 0;
    std::vector<StepRecord> records;
    double total_cost = 0.0;
    int tests_used = 0;
    int final_infections = 0;
};

// Independent random streams of one episode. Environment streams do not depend
// on the policy, so paired runs share them.
struct EpisodeStreams {
    Rng initial;
    Rng edges;
    Rng transmission;
    Rng policy;

    explicit EpisodeStreams(std::uint64_t seed)
        : initial(derive_seed(seed, 0, 0)),
          edges(derive_seed(seed, 0, 1)),
          transmission(derive_seed(seed, 0, 2)),
          policy(derive_seed(seed, 0, 3)) {}
};

inline SystemState draw_state(const Belief& b, double variate) {
    double acc = 0.0;
    StateMask last = 0;
    for (const auto& [mask, prob] : b.probabilities()) {
        acc += prob;
        last = mask;
        if (variate < acc) break;
    }
    return {b.size(), last};
}

inline EpisodeTrace run_episode(const ScenarioConfig& cfg, const Policy& policy, std::uint64_t seed) {
    EpisodeStreams rng(seed);
    EpisodeTrace trace;
    trace.digest = scenario_digest(cfg);
    trace.seed = seed;
    trace.records.reserve(static_cast<std::size_t>(cfg.horizon));

    SystemState x = draw_state(cfg.initial_belief, uniform01(rng.initial));
    Belief belief = cfg.initial_belief;
    QuarantineSet q(cfg.n);

    for (int t = 1; t <= cfg.horizon; ++t) {
        const ContactGraph& g = cfg.graph(t);
        // one variate per stream and step, whatever the policy does
        const double edge_variate = uniform01(rng.edges);
        const double transmission_variate = uniform01(rng.transmission);
        const std::optional<Edge> edge = sample_active_edge(g, q, edge_variate);

        std::optional<Edge> revealed;
        if (cfg.edge_visibility == EdgeVisibility::before) revealed = edge;
        const PolicyContext ctx{belief, t, q, cfg, revealed};
        const Action a = policy.act(ctx, rng.policy);
        if (a.target < 0 || a.target > cfg.n)
            throw ContractViolation("policy '" + policy.name() + "' returned action " + std::to_string(a.target) +
                                    " outside [0, N]");

        const Observation y = a.is_test() ? observation_of(x.infected(a.target)) : Observation::none;
        const QuarantineSet q_after = quarantine_after(q, a, y);

        StepRecord rec;
        rec.t = t;
        rec.active_edge = edge;
        rec.action = a;
        rec.observation = y;
        rec.quarantine_after = q_after;
        rec.true_state = x;
        rec.stage_cost = x.infections() + (a.is_test() ? cfg.lambda : 0.0);

        SystemState next = x;
        if (edge && edge_active(*edge, q_after)) next = sample_step(x, edge, cfg.p, transmission_variate);
        rec.transmitted = next != x;

        trace.total_cost += rec.stage_cost;
        if (a.is_test()) ++trace.tests_used;
        trace.records.push_back(rec);

        if (t < cfg.horizon) belief = belief_update(belief, a, y, g, q, cfg.p);
        x = next;
        q = q_after;
    }
    trace.final_infections = trace.records.back().true_state.infections();
    return trace;
}

struct MonteCarloSummary {
    int runs = 0;
    std::uint64_t base_seed = 0;
    double mean_cost = 0.0;
    // Absent for a single run.
    std::optional<double> std_error;
    double mean_tests_used = 0.0;
    double mean_final_infections = 0.0;
    std::vector<double> costs;
    std::vector<int> tests_used;
    std::vector<int> final_infections;
};

// Runs `n_runs` episodes; run k uses seed base_seed + k. Work is split across
// `workers` threads and aggregated in run order, so results do not depend on
// the worker count.
inline MonteCarloSummary monte_carlo_eval(const ScenarioConfig& cfg, const Policy& policy, int n_runs,
                                          std::uint64_t base_seed, int workers = 1) {
    if (n_runs < 1) throw ContractViolation("monte_carlo_eval needs at least one run");
    MonteCarloSummary out;
    out.runs = n_runs;
    out.base_seed = base_seed;
    out.costs.assign(static_cast<std::size_t>(n_runs), 0.0);
    out.tests_used.assign(static_cast<std::size_t>(n_runs), 0);
    out.final_infections.assign(static_cast<std::size_t>(n_runs), 0);

    auto run_range = [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            const EpisodeTrace tr = run_episode(cfg, policy, base_seed + static_cast<std::uint64_t>(k));
            out.costs[static_cast<std::size_t>(k)] = tr.total_cost;
            out.tests_used[static_cast<std::size_t>(k)] = tr.tests_used;
            out.final_infections[static_cast<std::size_t>(k)] = tr.final_infections;
        }
    };

    workers = std::clamp(workers, 1, n_runs);
    if (workers == 1) {
        run_range(0, n_runs);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        const int chunk = (n_runs + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n_runs, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    double sum = 0.0, tests = 0.0, finals = 0.0;
    for (int k = 0; k < n_runs; ++k) {
        sum += out.costs[static_cast<std::size_t>(k)];
        tests += out.tests_used[static_cast<std::size_t>(k)];
        finals += out.final_infections[static_cast<std::size_t>(k)];
    }
    out.mean_cost = sum / n_runs;
    out.mean_tests_used = tests / n_runs;
    out.mean_final_infections = finals / n_runs;
    if (n_runs > 1) {
        double ss = 0.0;
        for (double c : out.costs) ss += (c - out.mean_cost) * (c - out.mean_cost);
        out.std_error = std::sqrt(ss / (n_runs - 1) / n_runs);
    }
    return out;
}

struct PairedDifference {
    double mean = 0.0;       // mean of (a - b)
    double std_error = 0.0;  // of the mean difference
};

// Per-run differences of two evaluations over the same seeds.
inline PairedDifference paired_difference(const MonteCarloSummary& a, const MonteCarloSummary& b) {
    if (a.runs != b.runs || a.base_seed != b.base_seed)
        throw ContractViolation("paired comparison needs identical seed streams");
    const int n = a.runs;
    PairedDifference d;
    for (int k = 0; k < n; ++k) d.mean += a.costs[static_cast<std::size_t>(k)] - b.costs[static_cast<std::size_t>(k)];
    d.mean /= n;
    if (n > 1) {
        double ss = 0.0;
        for (int k = 0; k < n; ++k) {
            const double diff = a.costs[static_cast<std::size_t>(k)] - b.costs[static_cast<std::size_t>(k)] - d.mean;
            ss += diff * diff;
        }
        d.std_error = std::sqrt(ss / (n - 1) / n);
    }
    return d;
}

}  // namespace seqtest
