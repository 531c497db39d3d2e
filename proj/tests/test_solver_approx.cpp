#include <gtest/gtest.h>

#include "oracles.hpp"
#include "seqtest/detail/simplex.hpp"
#include "seqtest/oracle.hpp"
#include "seqtest/solver_approx.hpp"

using namespace seqtest;

TEST(Simplex, SmallPrograms) {
    // max x + 2y  s.t.  x + y + s = 4, x + 3y + r = 6
    auto r = detail::maximize_equality({{1, 1, 1, 0}, {1, 3, 0, 1}}, {4, 6}, {1, 2, 0, 0});
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.objective, 5.0, 1e-12);
    EXPECT_NEAR(r.solution[0], 3.0, 1e-12);
    EXPECT_NEAR(r.solution[1], 1.0, 1e-12);

    // x + y = 1, x - y = 3 with x, y >= 0 has no solution
    r = detail::maximize_equality({{1, 1}, {1, -1}}, {1, 3}, {0, 0});
    EXPECT_FALSE(r.feasible);

    // redundant rows are tolerated
    r = detail::maximize_equality({{1, 1}, {2, 2}}, {1, 2}, {3, 1});
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.objective, 3.0, 1e-12);

    EXPECT_THROW(detail::maximize_equality({{1}}, {-1}, {1}), ContractViolation);
}

TEST(Grid, CornersAndNesting) {
    const auto states = upward_closure(3, {0b001});
    EXPECT_EQ(states.size(), 4u);
    for (StateMask s : states) EXPECT_TRUE(s & 1);
    const auto small = random_grid(3, states, 3, 9);
    const auto large = random_grid(3, states, 6, 9);
    for (std::size_t k = 0; k < small.size(); ++k)
        EXPECT_EQ(small.points[k].probabilities(), large.points[k].probabilities());
    const auto reg = regular_grid(2, {0, 1, 2, 3}, 2);
    EXPECT_EQ(reg.size(), 10u);
    const auto grid = merge(corner_grid(3, states), corner_grid(3, states));
    EXPECT_EQ(grid.size(), 4u);
}

TEST(Prune, KeepsWitnessedVectorsOnly) {
    AlphaSet set{2, 1, QuarantineSet(2), {}};
    set.vectors.push_back({{0, 5, 5, 5}, Action::none()});
    set.vectors.push_back({{5, 0, 5, 5}, Action::none()});
    set.vectors.push_back({{6, 6, 6, 6}, Action::none()});
    const BeliefGrid grid{{Belief::point(SystemState(2, 0))}, "test"};
    const auto pruned = prune_at_points(set, grid);
    ASSERT_EQ(pruned.vectors.size(), 1u);
    EXPECT_EQ(pruned.vectors[0].values, set.vectors[0].values);
    AlphaSet one{2, 1, QuarantineSet(2), {set.vectors[2]}};
    EXPECT_EQ(prune_at_points(one, grid).vectors.size(), 1u);
}

TEST(Prune, GridValuesUnchanged) {
    const auto cfg = fixtures::load("scenario_a");
    const auto vf = solve(cfg);
    BeliefGrid grid = corner_grid(3, upward_closure(3, {0}));
    grid.points.resize(4);
    grid.points.push_back(Belief::uniform(3));
    for (int t = 1; t <= cfg.horizon; ++t) {
        const auto& full = vf.stage(t);
        const auto pruned = prune_at_points(full, grid);
        EXPECT_LE(pruned.vectors.size(), std::min(full.vectors.size(), grid.size()));
        for (const auto& b : grid.points) EXPECT_EQ(evaluate(pruned, b).value, evaluate(full, b).value);
    }
}

TEST(Interpolate, ReproducesLinearFunctionsAndFlagsCoverage) {
    const auto states = upward_closure(2, {0});
    std::vector<GridValue> table;
    for (const auto& b : corner_grid(2, states).points) table.push_back({b, expected_infections(b)});
    for (const auto& b : fixtures::random_beliefs(2, 20, 1)) {
        const auto v = interpolate(table, b);
        ASSERT_TRUE(v.has_value());
        EXPECT_NEAR(*v, expected_infections(b), 1e-12);
    }
    std::vector<GridValue> partial(table.begin(), table.begin() + 2);
    EXPECT_FALSE(interpolate(partial, Belief::uniform(2)).has_value());
    LowerBound lb(2, 1);
    lb.insert(1, QuarantineSet(2), partial);
    EXPECT_THROW(lb.value(1, QuarantineSet(2), Belief::uniform(2)), CoverageError);
}

TEST(Upper, WithEveryWitnessEqualsExact) {
    const auto cfg = fixtures::load("pair");
    const auto exact = solve(cfg);
    // a dense regular grid witnesses every vector of the exact sets
    const auto grid = regular_grid(2, upward_closure(2, {0}), 12);
    const auto upper = approx_solve_upper(cfg, grid);
    for (const auto& b : fixtures::random_beliefs(2, 50, 2))
        for (int t = 1; t <= cfg.horizon; ++t)
            EXPECT_NEAR(upper.value(t, QuarantineSet(2), b), exact.value(t, QuarantineSet(2), b), 1e-9);
}

TEST(Upper, SingleInteriorPointIsStillAnUpperBound) {
    const auto cfg = fixtures::load("scenario_a");
    const BeliefGrid grid{{Belief::uniform(3)}, "single"};
    const auto upper = approx_solve_upper(cfg, grid);
    for (const auto& b : fixtures::random_beliefs(3, 30, 3))
        EXPECT_GE(upper.value(1, QuarantineSet(3), b), oracle_value(cfg, b) - 1e-9);
}

TEST(Bounds, HugeTestCostIsExact) {
    auto cfg = fixtures::load("star");
    cfg.lambda = 13.0;
    const auto grid = default_grid(3, {Belief::uniform(3)}, 2, 4);
    const auto probes = fixtures::random_beliefs(3, 10, 4);
    const auto s = sandwich(cfg, grid, probes);
    const auto exact = solve(cfg);
    for (const auto& g : s.gaps) {
        EXPECT_TRUE(g.tight);
        EXPECT_NEAR(g.upper, exact.value(g.t, QuarantineSet(3), probes[g.probe]), 1e-9);
    }
}

TEST(Lower, FrozenFreeDynamicsIsExact) {
    const auto cfg = fixtures::make(3, 3, 0.0, 0.0, {{1, 2, 1.0}}, Belief::uniform(3));
    const auto grid = default_grid(3, {Belief::uniform(3)}, 0, 1);
    const auto lower = approx_solve_lower(cfg, grid);
    const auto exact = solve(cfg);
    for (const auto& b : fixtures::random_beliefs(3, 20, 5))
        EXPECT_NEAR(lower.value(1, QuarantineSet(3), b), exact.value(1, QuarantineSet(3), b), 1e-9);
}

TEST(Lower, SingleIndividualCornersExact) {
    const auto cfg = fixtures::make(1, 3, 0.5, 0.1, {}, Belief::uniform(1));
    const auto lower = approx_solve_lower(cfg, corner_grid(1, {0, 1}));
    EXPECT_NEAR(lower.value(1, QuarantineSet(1), Belief::point(SystemState(1, 1))), 3.0, 1e-12);
    EXPECT_NEAR(lower.value(1, QuarantineSet(1), Belief::point(SystemState(1, 0))), 0.0, 1e-12);
}

TEST(Sandwich, OracleBetweenBoundsOnEveryTinyScenario) {
    for (const auto& name : fixtures::tiny_names()) {
        const auto cfg = fixtures::load(name);
        const auto grid = default_grid(cfg.n, {cfg.initial_belief}, 3, 6);
        std::vector<Belief> probes{cfg.initial_belief};
        const auto states = upward_closure(cfg.n, support_states({cfg.initial_belief}));
        for (const auto& b : random_grid(cfg.n, states, 10, 77).points) probes.push_back(b);
        const auto s = sandwich(cfg, grid, probes);
        for (const auto& g : s.gaps) {
            const double v = oracle_value(cfg, probes[g.probe], g.t, QuarantineSet(cfg.n));
            EXPECT_LE(g.lower, v + 1e-9) << name;
            EXPECT_GE(g.upper, v - 1e-9) << name;
            EXPECT_EQ(g.tight, g.gap < kTightGap);
        }
    }
}

TEST(Sandwich, RefiningTheGridNeverLoosensEitherBound) {
    const auto cfg = fixtures::load("scenario_a");
    const auto coarse = default_grid(3, {cfg.initial_belief}, 2, 8);
    const auto fine = default_grid(3, {cfg.initial_belief}, 6, 8);
    const auto a = sandwich(cfg, coarse, coarse.points);
    const auto b = sandwich(cfg, fine, coarse.points);
    ASSERT_EQ(a.gaps.size(), b.gaps.size());
    for (std::size_t k = 0; k < a.gaps.size(); ++k) {
        EXPECT_LE(b.gaps[k].upper, a.gaps[k].upper + 1e-9);
        EXPECT_GE(b.gaps[k].lower, a.gaps[k].lower - 1e-9);
    }
}

TEST(Approx, CapsAreEnforced) {
    auto cfg = fixtures::make(2, 2, 0.5, 0.1, {{1, 2, 1.0}}, Belief::uniform(2));
    ApproxCaps caps;
    caps.max_n = 1;
    EXPECT_THROW(approx_solve_upper(cfg, corner_grid(2, {0}), caps), SizeError);
    EXPECT_THROW(approx_solve_upper(cfg, BeliefGrid{}), ValidationError);
}
