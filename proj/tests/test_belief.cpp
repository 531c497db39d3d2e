#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>

#include "oracles.hpp"
#include "seqtest/belief.hpp"
#include "seqtest/scenario.hpp"

using namespace seqtest;

namespace {

Belief from(int n, std::initializer_list<std::pair<const char*, double>> entries) {
    Belief::Map m;
    for (const auto& [s, prob] : entries) m[SystemState::parse(s).bits()] = prob;
    return Belief(n, m);
}

void expect_same(const Belief& b, const oracle::Dist& d, double tol) {
    double mass = 0.0;
    for (const auto& [x, prob] : d) {
        EXPECT_NEAR(b.probability(x), prob, tol) << "state " << x;
        mass += b.probability(x);
    }
    EXPECT_NEAR(mass, 1.0, tol) << "belief has support outside the reference posterior";
}

}  // namespace

TEST(Belief, ValidatesConstruction) {
    EXPECT_THROW(Belief(2, {{0, 0.5}}), ValidationError);
    EXPECT_THROW(Belief(2, {{0, 0.5}, {1, -0.5}, {2, 1.0}}), ValidationError);
    EXPECT_THROW(Belief(2, {{4, 1.0}}), ValidationError);
    EXPECT_NO_THROW(Belief(2, {{0, 0.5}, {3, 0.5 + 5e-10}}));
    EXPECT_THROW(Belief::normalized(2, {}), InconsistentObservation);
    const auto b = Belief::normalized(2, {{0, 2.0}, {1, 6.0}, {2, 1e-14}});
    EXPECT_EQ(b.support_size(), 2u);
    EXPECT_DOUBLE_EQ(b.probability(1), 0.75);
}

TEST(Belief, Statistics) {
    EXPECT_DOUBLE_EQ(expected_infections(Belief::point(SystemState::parse("11"))), 2.0);
    EXPECT_DOUBLE_EQ(expected_infections(Belief::uniform(2)), 1.0);
    EXPECT_DOUBLE_EQ(expected_infections(from(2, {{"10", 0.7}, {"11", 0.3}})), 1.3);
    EXPECT_DOUBLE_EQ(marginal_infection(Belief::point(SystemState::parse("10")), 1, QuarantineSet(2)), 1.0);
    EXPECT_DOUBLE_EQ(marginal_infection(Belief::point(SystemState::parse("10")), 1, QuarantineSet(2, {1})), 0.0);
    EXPECT_DOUBLE_EQ(marginal_infection(Belief::uniform(2), 2, QuarantineSet(2)), 0.5);
    const auto b = fixtures::random_beliefs(3, 1, 4).front();
    double sum = 0.0;
    for (int u = 1; u <= 3; ++u) sum += marginal_infection(b, u, QuarantineSet(3));
    EXPECT_NEAR(sum, expected_infections(b), 1e-12);
}

TEST(Belief, ObservationLikelihood) {
    const auto x = SystemState::parse("10");
    EXPECT_EQ(observation_likelihood(x, Action::test(1), Observation::positive), 1.0);
    EXPECT_EQ(observation_likelihood(x, Action::test(1), Observation::negative), 0.0);
    EXPECT_EQ(observation_likelihood(x, Action::none(), Observation::none), 1.0);
    EXPECT_THROW(observation_likelihood(x, Action::test(1), Observation::none), ContractViolation);
    EXPECT_THROW(observation_likelihood(x, Action::none(), Observation::positive), ContractViolation);
}

TEST(BeliefUpdate, Examples) {
    const ContactGraph g(2, {{1, 2, 1.0}});
    const QuarantineSet none(2);
    auto b = belief_update(from(2, {{"00", 0.5}, {"10", 0.5}}), Action::test(1), Observation::negative, g, none, 0.0);
    EXPECT_DOUBLE_EQ(b.probability(0), 1.0);

    b = belief_update(Belief::point(SystemState::parse("10")), Action::none(), Observation::none, g, none, 0.3);
    EXPECT_NEAR(b.probability(SystemState::parse("10")), 0.7, 1e-15);
    EXPECT_NEAR(b.probability(SystemState::parse("11")), 0.3, 1e-15);

    b = belief_update(Belief::uniform(2), Action::test(2), Observation::positive, g, none, 0.5);
    expect_same(b, oracle::joint_posterior(ContactSchedule::constant(g, 1), 0.5, {{0, .25}, {1, .25}, {2, .25}, {3, .25}},
                                           {{2, 1}}),
                1e-12);

    EXPECT_THROW(belief_update(Belief::point(SystemState::parse("00")), Action::test(1), Observation::positive, g, none,
                               0.5),
                 InconsistentObservation);
}

TEST(BeliefUpdate, NoTestEqualsPrediction) {
    const ContactGraph g(3, {{1, 2, 1.0}, {2, 3, 0.5}});
    for (const auto& b : fixtures::random_beliefs(3, 20, 8)) {
        const auto updated = belief_update(b, Action::none(), Observation::none, g, QuarantineSet(3, {3}), 0.4);
        std::map<StateMask, double> mixed;
        for (const auto& [x, prob] : b.probabilities())
            for (const auto& [y, py] : oracle::step(g, x, 0b100, 0b100, 0.4)) mixed[y] += prob * py;
        expect_same(updated, mixed, 1e-12);
    }
}

TEST(BeliefUpdate, PositiveResultPinsTheTestedIndividual) {
    const ContactGraph g(3, {{1, 2, 1.0}, {2, 3, 1.0}});
    for (const auto& b : fixtures::random_beliefs(3, 30, 9))
        for (int u = 1; u <= 3; ++u) {
            if (observation_probability(b, Action::test(u), Observation::positive) <= 0.0) continue;
            const auto filtered = filter_observation(b, Action::test(u), Observation::positive);
            EXPECT_NEAR(marginal_infection(filtered, u, QuarantineSet(3)), 1.0, 1e-12);
            const auto next = belief_update(b, Action::test(u), Observation::positive, g, QuarantineSet(3), 0.7);
            EXPECT_NEAR(next.total(), 1.0, 1e-9);
        }
}

TEST(BeliefUpdate, BranchesPartitionTheObservationSpace) {
    const ContactGraph g(3, {{1, 2, 1.0}, {1, 3, 2.0}});
    for (const auto& b : fixtures::random_beliefs(3, 20, 10))
        for (int u = 0; u <= 3; ++u) {
            double total = 0.0;
            for (const auto& br : branches(b, Action::test(u), g, QuarantineSet(3), 0.5)) {
                total += br.probability;
                EXPECT_EQ(br.quarantine.contains(u), u != 0 && br.observation == Observation::positive);
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
}

// Every positive-probability history of length <= 3 on N <= 3 instances: the
// recursive filter equals the posterior from joint enumeration of state paths.
TEST(BeliefUpdate, MatchesJointEnumerationOverAllShortHistories) {
    std::vector<ScenarioConfig> cases;
    for (const auto& name : fixtures::tiny_names()) cases.push_back(fixtures::load(name));
    cases.push_back(fixtures::make(2, 3, 0.5, 0.0, {{1, 2, 1.0}}, Belief::uniform(2)));
    cases.push_back(fixtures::make(1, 3, 0.5, 0.0, {}, Belief::uniform(1)));
    cases.push_back(fixtures::make(3, 3, 1.0, 0.0, {{1, 2, 1.0}, {2, 3, 1.0}, {1, 3, 1.0}}, Belief::uniform(3)));
    std::size_t checked = 0;
    for (const auto& cfg : cases) {
        const oracle::Dist prior(cfg.initial_belief.probabilities().begin(), cfg.initial_belief.probabilities().end());
        std::function<void(const Belief&, const QuarantineSet&, std::vector<oracle::Event>&)> explore =
            [&](const Belief& b, const QuarantineSet& q, std::vector<oracle::Event>& history) {
                if (!history.empty()) {
                    expect_same(b, oracle::joint_posterior(cfg.schedule, cfg.p, prior, history), 1e-9);
                    ++checked;
                }
                const int t = static_cast<int>(history.size()) + 1;
                if (t > 3 || t > cfg.horizon) return;
                for (int u = 0; u <= cfg.n; ++u) {
                    const Action a = Action::test(u);
                    const std::vector<Observation> ys =
                        u == 0 ? std::vector<Observation>{Observation::none}
                               : std::vector<Observation>{Observation::negative, Observation::positive};
                    for (Observation y : ys) {
                        if (observation_probability(b, a, y) <= 0.0) continue;
                        history.push_back({u, y == Observation::none ? -1 : (y == Observation::positive ? 1 : 0)});
                        explore(belief_update(b, a, y, cfg.graph(t), q, cfg.p), quarantine_after(q, a, y), history);
                        history.pop_back();
                    }
                }
            };
        std::vector<oracle::Event> history;
        explore(cfg.initial_belief, QuarantineSet(cfg.n), history);
    }
    EXPECT_GT(checked, 1000u);
}
