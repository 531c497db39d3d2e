#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "seqtest/oracle.hpp"
#include "seqtest/policies.hpp"
#include "seqtest/solver_exact.hpp"

using namespace seqtest;

namespace {

AlphaSet make_set(int n, std::vector<std::vector<double>> rows) {
    AlphaSet s{n, 1, QuarantineSet(n), {}};
    for (auto& r : rows) s.vectors.push_back({std::move(r), Action::none()});
    return s;
}

}  // namespace

TEST(Evaluate, MinimumWithLowestIndexTies) {
    const auto terminal = terminal_set(2, 1, QuarantineSet(2));
    EXPECT_DOUBLE_EQ(evaluate(terminal, Belief::point(SystemState::parse("11"))).value, 2.0);
    const auto s = make_set(2, {{1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    const auto e = evaluate(s, Belief::uniform(2));
    EXPECT_DOUBLE_EQ(e.value, 0.0);
    EXPECT_EQ(e.argmin, 1u);
    EXPECT_THROW(evaluate(make_set(2, {}), Belief::uniform(2)), ContractViolation);
}

TEST(Prune, RemovesDominatedAndDuplicateVectors) {
    std::vector<AlphaVector> v{{{1, 2}, Action::test(1)}, {{0, 3}, Action::none()}, {{1, 2}, Action::none()},
                               {{2, 2}, Action::none()}};
    const auto kept = prune_dominated(v);
    ASSERT_EQ(kept.size(), 2u);
    for (const auto& a : kept) EXPECT_NE(a.values, (std::vector<double>{2, 2}));
}

TEST(Prune, NeverChangesTheValueFunction) {
    const auto cfg = fixtures::load("scenario_a");
    Rng rng(3);
    std::vector<AlphaVector> raw;
    for (int k = 0; k < 60; ++k) {
        std::vector<double> v(8);
        for (double& x : v) x = std::floor(uniform01(rng) * 6.0);
        raw.push_back({v, Action::test(k % 4)});
    }
    const AlphaSet full{3, 1, QuarantineSet(3), raw};
    const AlphaSet pruned{3, 1, QuarantineSet(3), prune_dominated(raw)};
    EXPECT_LT(pruned.vectors.size(), full.vectors.size());
    for (const auto& b : fixtures::random_beliefs(3, 1000, 17))
        EXPECT_DOUBLE_EQ(evaluate(full, b).value, evaluate(pruned, b).value);
    (void)cfg;
}

TEST(Backup, HugeTestCostNeverTests) {
    const auto cfg = fixtures::make(3, 4, 0.5, 13.0, {{1, 2, 1.0}, {2, 3, 1.0}}, Belief::uniform(3));
    const auto vf = solve(cfg);
    for (int t = 1; t <= cfg.horizon; ++t) {
        EXPECT_EQ(vf.stage(t).vectors.size(), 1u);
        for (const auto& v : vf.stage(t).vectors) EXPECT_FALSE(v.action.is_test());
    }
    const auto policy = extract_policy(std::make_shared<const ValueFunction>(vf));
    for (const auto& b : fixtures::random_beliefs(3, 50, 1))
        for (int t = 1; t <= cfg.horizon; ++t) {
            const PolicyContext ctx{b, t, QuarantineSet(3), cfg, std::nullopt};
            EXPECT_FALSE(policy->distribution(ctx).front().first.is_test());
        }
}

TEST(Backup, FrozenDynamicsAccumulateCost) {
    const auto cfg = fixtures::make(1, 2, 0.0, 0.0, {}, Belief::uniform(1));
    const auto vf = solve(cfg);
    for (const auto& b : fixtures::random_beliefs(1, 20, 2))
        EXPECT_NEAR(vf.value(1, QuarantineSet(1), b), 2.0 * b.probability(1), 1e-12);
    // a single individual gains nothing from free tests, whatever p is
    const auto lone = fixtures::make(1, 2, 0.8, 0.0, {}, Belief::uniform(1));
    EXPECT_NEAR(solve(lone).value(1, QuarantineSet(1), Belief::uniform(1)), 1.0, 1e-12);
}

TEST(Backup, HorizonOneIsTerminalCost) {
    const auto cfg = fixtures::make(2, 1, 0.5, 0.1, {{1, 2, 1.0}}, Belief::uniform(2));
    const auto vf = solve(cfg);
    ASSERT_EQ(vf.stage(1).vectors.size(), 1u);
    EXPECT_EQ(vf.stage(1).vectors[0].values, infection_cost_vector(2));
}

TEST(Backup, SingleBackupOnPairMatchesOracle) {
    const auto cfg = fixtures::make(2, 2, 0.5, 0.25, {{1, 2, 1.0}}, Belief::uniform(2));
    const auto set = exact_backup(terminal_set(2, 2, QuarantineSet(2)), cfg.graph(1), QuarantineSet(2), cfg.p, cfg.lambda);
    EXPECT_NEAR(evaluate(set, Belief::uniform(2)).value, oracle_value(cfg, Belief::uniform(2)), 1e-12);
}

TEST(Backup, DeterministicCanonicalOrder) {
    const auto cfg = fixtures::load("dynamic");
    const auto a = solve(cfg);
    const auto b = solve(cfg);
    for (const auto& [key, set] : a.slices()) {
        const auto& other = b.slice(key.first, set.quarantine);
        ASSERT_EQ(set.vectors.size(), other.vectors.size());
        for (std::size_t k = 0; k < set.vectors.size(); ++k) {
            EXPECT_EQ(set.vectors[k].values, other.vectors[k].values);
            if (k > 0) {
                EXPECT_TRUE(detail::canonical_less(set.vectors[k - 1], set.vectors[k]));
            }
        }
    }
}

TEST(Solve, PairMatchesOracleAtProbes) {
    const auto cfg = fixtures::load("pair");
    const auto vf = solve(cfg);
    for (const auto& b : fixtures::random_beliefs(2, 5, 21))
        EXPECT_NEAR(vf.value(1, QuarantineSet(2), b), oracle_value(cfg, b), 1e-9);
}

TEST(Solve, EveryStageAndQuarantineSliceMatchesOracle) {
    for (const auto& name : fixtures::tiny_names()) {
        const auto cfg = fixtures::load(name);
        const auto vf = solve(cfg);
        for (const auto& [key, set] : vf.slices())
            for (const auto& b : fixtures::random_beliefs(cfg.n, 5, 100 + key.first)) {
                // beliefs consistent with the slice: quarantined individuals are infected
                Belief::Map m;
                for (const auto& [x, prob] : b.probabilities()) m[x | set.quarantine.mask()] += prob;
                const Belief bq = Belief::normalized(cfg.n, m);
                EXPECT_NEAR(vf.value(key.first, set.quarantine, bq), oracle_value(cfg, bq, key.first, set.quarantine),
                            1e-9)
                    << name << " t=" << key.first << " q=" << set.quarantine.mask();
            }
    }
}

TEST(Solve, ScenarioAGoldenValue) {
    const auto cfg = fixtures::load("scenario_a");
    const double v = solve(cfg).value(1, QuarantineSet(3), cfg.initial_belief);
    EXPECT_NEAR(v, oracle_value(cfg, cfg.initial_belief), 1e-12);
    // frozen after the first cross-checked computation
    EXPECT_NEAR(v, 5.4583333333333339, 1e-12);
}

TEST(Solve, CapsAreEnforced) {
    auto cfg = fixtures::make(7, 2, 0.5, 0.1, {{1, 2, 1.0}}, Belief::uniform(7));
    EXPECT_THROW(solve(cfg), SizeError);
    cfg = fixtures::make(2, 9, 0.5, 0.1, {{1, 2, 1.0}}, Belief::uniform(2));
    EXPECT_THROW(solve(cfg), SizeError);
    SolverCaps caps;
    caps.max_t = 9;
    EXPECT_NO_THROW(solve(cfg, caps));
}

TEST(Solve, ValueIsConcaveInTheBelief) {
    const auto cfg = fixtures::load("star");
    const auto vf = solve(cfg);
    const auto bs = fixtures::random_beliefs(3, 200, 5);
    Rng rng(8);
    for (std::size_t k = 0; k + 1 < bs.size(); k += 2) {
        const double a = uniform01(rng);
        const Belief mix = bs[k].mix(bs[k + 1], a);
        for (int t = 1; t <= cfg.horizon; ++t)
            EXPECT_GE(vf.value(t, QuarantineSet(3), mix),
                      a * vf.value(t, QuarantineSet(3), bs[k]) + (1 - a) * vf.value(t, QuarantineSet(3), bs[k + 1]) -
                          1e-9);
    }
}

TEST(Solve, ValueNondecreasingInTestCost) {
    auto cfg = fixtures::load("scenario_a");
    const auto probes = fixtures::random_beliefs(3, 20, 12);
    std::vector<double> prev(probes.size(), -1.0);
    for (double lambda : {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 20.0}) {
        cfg.lambda = lambda;
        const auto vf = solve(cfg);
        for (std::size_t k = 0; k < probes.size(); ++k) {
            const double v = vf.value(1, QuarantineSet(3), probes[k]);
            EXPECT_GE(v, prev[k] - 1e-12);
            prev[k] = v;
        }
    }
}

TEST(Policy, ExactPolicyAttainsTheValue) {
    for (const auto& name : fixtures::tiny_names()) {
        const auto cfg = fixtures::load(name);
        const auto vf = std::make_shared<const ValueFunction>(solve(cfg));
        const auto policy = extract_policy(vf);
        for (const auto& b : fixtures::random_beliefs(cfg.n, 10, 44))
            EXPECT_NEAR(evaluate_policy_exact(cfg, *policy, b), vf->value(1, QuarantineSet(cfg.n), b), 1e-9) << name;
    }
}

TEST(Policy, FullyInfectedPointMassBreaksTiesToNoTest) {
    const auto cfg = fixtures::make(3, 3, 0.5, 0.0, {{1, 2, 1.0}}, Belief::uniform(3));
    const auto policy = extract_policy(std::make_shared<const ValueFunction>(solve(cfg)));
    const Belief all = Belief::point(SystemState::parse("111"));
    const PolicyContext ctx{all, 1, QuarantineSet(3), cfg, std::nullopt};
    EXPECT_EQ(policy->distribution(ctx).front().first, Action::none());
}

TEST(Policy, ExactBeatsEveryOtherPolicy) {
    for (const auto& name : fixtures::tiny_names()) {
        const auto cfg = fixtures::load(name);
        const auto vf = solve(cfg);
        for (const auto& pname : policy_names()) {
            const auto policy = make_policy(pname, cfg);
            for (const auto& b : fixtures::random_beliefs(cfg.n, 5, 61))
                EXPECT_LE(vf.value(1, QuarantineSet(cfg.n), b), evaluate_policy_exact(cfg, *policy, b) + 1e-9)
                    << name << " " << pname;
        }
    }
}

TEST(Oracle, TrivialCases) {
    const auto frozen = fixtures::make(3, 4, 0.0, 0.3, {{1, 2, 1.0}}, Belief::point(SystemState(3, 0)));
    EXPECT_DOUBLE_EQ(oracle_value(frozen, frozen.initial_belief), 0.0);
    const auto short_run = fixtures::make(3, 1, 0.5, 0.3, {{1, 2, 1.0}}, Belief::uniform(3));
    EXPECT_DOUBLE_EQ(oracle_value(short_run, Belief::uniform(3)), 1.5);
    OracleCaps caps;
    caps.max_nodes = 10;
    EXPECT_THROW(oracle_value(fixtures::load("scenario_a"), Belief::uniform(3), 1, QuarantineSet(3), caps), SizeError);
}
