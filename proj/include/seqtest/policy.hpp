#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/model.hpp"
#include "seqtest/rng.hpp"
#include "seqtest/scenario.hpp"

namespace seqtest {

// Sufficient statistic of the learner's history at step t.
struct PolicyContext {
    const Belief& belief;
    int t = 1;
    const QuarantineSet& quarantine;
    const ScenarioConfig& scenario;
    // Set only when the scenario reveals the active edge before the decision.
    std::optional<Edge> revealed_edge;

    const ContactGraph& graph() const { return scenario.graph(t); }
    int population() const { return scenario.n; }
    bool final_step() const { return t == scenario.horizon; }
};

using ActionDistribution = std::vector<std::pair<Action, double>>;

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual Action act(const PolicyContext& ctx, Rng& rng) const = 0;
    virtual ActionDistribution distribution(const PolicyContext& ctx) const = 0;
};

// Policies whose action is a function of the context alone.
class DeterministicPolicy : public Policy {
public:
    virtual Action decide(const PolicyContext& ctx) const = 0;
    Action act(const PolicyContext& ctx, Rng&) const final { return decide(ctx); }
    ActionDistribution distribution(const PolicyContext& ctx) const final { return {{decide(ctx), 1.0}}; }
};

// Tests allowed at this step: no test, or any individual not yet quarantined.
inline std::vector<Action> admissible_actions(int n, const QuarantineSet& q) {
    std::vector<Action> out{Action::none()};
    for (int u = 1; u <= n; ++u)
        if (!q.contains(u)) out.push_back(Action::test(u));
    return out;
}

// Index of the smallest value; values within `tol` of the minimum tie and the
// lowest index wins.
inline std::size_t argmin_lowest(const std::vector<double>& values, double tol = 1e-12) {
    if (values.empty()) throw ContractViolation("argmin over an empty range");
    double best = values.front();
    for (double v : values) best = std::min(best, v);
    for (std::size_t k = 0; k < values.size(); ++k)
        if (values[k] <= best + tol) return k;
    return 0;
}

}  // namespace seqtest
