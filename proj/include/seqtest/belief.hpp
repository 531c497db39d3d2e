#pragma once

// Posterior over the hidden infection state and its Bayes-rule recursion.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seqtest/errors.hpp"
#include "seqtest/model.hpp"

namespace seqtest {

// Entries below this mass are dropped after each update.
inline constexpr double kBeliefPruneThreshold = 1e-12;
inline constexpr double kNormalizationTolerance = 1e-9;

// Sparse distribution over {0,1}^N keyed by state bitmask (absent = 0).
class Belief {
public:
    using Map = std::map<StateMask, double>;

    Belief() = default;

    // Validates the support and normalization.
    Belief(int n, Map probs) : n_(n), probs_(std::move(probs)) {
        check_population(n);
        double total = 0.0;
        for (const auto& [mask, prob] : probs_) {
            if ((mask & ~full_mask(n)) != 0) throw ValidationError("belief support state has bits beyond N");
            if (!(prob > 0.0 && prob <= 1.0 + kNormalizationTolerance))
                throw ValidationError("belief probabilities must lie in (0, 1]");
            total += prob;
        }
        if (probs_.empty() || std::abs(total - 1.0) > kNormalizationTolerance)
            throw ValidationError("belief must sum to 1 (got " + std::to_string(total) + ")");
    }

    static Belief point(const SystemState& x) { return Belief(x.size(), Map{{x.bits(), 1.0}}); }

    static Belief uniform(int n) {
        check_population(n);
        Map m;
        const StateMask count = full_mask(n) + 1;
        for (StateMask s = 0; s < count; ++s) m[s] = 1.0 / static_cast<double>(count);
        return Belief(n, std::move(m));
    }

    static Belief uniform_over(const std::vector<SystemState>& states) {
        if (states.empty()) throw ValidationError("uniform_over needs at least one state");
        Map m;
        for (const auto& s : states) m[s.bits()] += 1.0;
        for (auto& [mask, w] : m) w /= static_cast<double>(states.size());
        return Belief(states.front().size(), std::move(m));
    }

    // Drops entries below the pruning threshold and rescales to total mass 1.
    // Throws InconsistentObservation when no mass is left.
    static Belief normalized(int n, Map weights) {
        double total = 0.0;
        for (const auto& [mask, w] : weights) total += w;
        if (!(total > 0.0)) throw InconsistentObservation("observation has zero probability under the belief");
        Map out;
        double kept = 0.0;
        for (const auto& [mask, w] : weights) {
            const double prob = w / total;
            if (prob >= kBeliefPruneThreshold) {
                out.emplace_hint(out.end(), mask, prob);
                kept += prob;
            }
        }
        for (auto& [mask, prob] : out) prob /= kept;
        Belief b;
        b.n_ = n;
        b.probs_ = std::move(out);
        return b;
    }

    // Dense vector of length 2^N.
    static Belief from_dense(int n, const std::vector<double>& dense) {
        Map m;
        for (std::size_t s = 0; s < dense.size(); ++s)
            if (dense[s] > 0.0) m[static_cast<StateMask>(s)] = dense[s];
        return normalized(n, std::move(m));
    }

    int size() const { return n_; }
    const Map& probabilities() const { return probs_; }
    std::size_t support_size() const { return probs_.size(); }

    double probability(StateMask s) const {
        auto it = probs_.find(s);
        return it == probs_.end() ? 0.0 : it->second;
    }
    double probability(const SystemState& x) const { return probability(x.bits()); }

    std::vector<double> to_dense() const {
        std::vector<double> d(static_cast<std::size_t>(full_mask(n_)) + 1, 0.0);
        for (const auto& [mask, prob] : probs_) d[mask] = prob;
        return d;
    }

    double total() const {
        double t = 0.0;
        for (const auto& [mask, prob] : probs_) t += prob;
        return t;
    }

    // Convex combination a*this + (1-a)*other.
    Belief mix(const Belief& other, double a) const {
        if (other.n_ != n_) throw DimensionError("mixing beliefs of different dimension");
        Map m;
        for (const auto& [mask, prob] : probs_) m[mask] += a * prob;
        for (const auto& [mask, prob] : other.probs_) m[mask] += (1.0 - a) * prob;
        std::erase_if(m, [](const auto& kv) { return kv.second <= 0.0; });
        return normalized(n_, std::move(m));
    }

private:
    int n_ = 1;
    Map probs_;
};

inline double observation_likelihood(const SystemState& x, Action a, Observation y) {
    if (a.target < 0 || a.target > x.size()) throw ContractViolation("action outside [0, N]");
    if (!a.is_test()) {
        if (y != Observation::none) throw ContractViolation("an observation requires a test");
        return 1.0;
    }
    if (y == Observation::none) throw ContractViolation("a test always produces an observation");
    return x.infected(a.target) == (y == Observation::positive) ? 1.0 : 0.0;
}

inline QuarantineSet quarantine_after(const QuarantineSet& q, Action a, Observation y) {
    return (a.is_test() && y == Observation::positive) ? q.with(a.target) : q;
}

// Conditions the belief on the test outcome (no propagation).
inline Belief filter_observation(const Belief& b, Action a, Observation y) {
    if (!a.is_test()) {
        observation_likelihood(SystemState(b.size(), 0), a, y);
        return b;
    }
    Belief::Map m;
    for (const auto& [mask, prob] : b.probabilities())
        if (observation_likelihood(SystemState(b.size(), mask), a, y) > 0.0) m.emplace_hint(m.end(), mask, prob);
    return Belief::normalized(b.size(), std::move(m));
}

// Pushes the belief through one step of the kernel.
inline Belief predict(const Belief& b, const ContactGraph& g, const QuarantineSet& drawn_from,
                      const QuarantineSet& blocked, double p) {
    if (g.size() != b.size()) throw DimensionError("belief and graph dimensions differ");
    Belief::Map m;
    for (const auto& [mask, prob] : b.probabilities())
        for (const auto& o : transition_kernel(SystemState(b.size(), mask), g, drawn_from, blocked, p))
            m[o.state.bits()] += prob * o.probability;
    return Belief::normalized(b.size(), std::move(m));
}

// One step of the recursion: filter on the observation at t, then propagate
// through P_t. `q` is the quarantine set before the test; a positive result
// quarantines the tested individual before transmission.
inline Belief belief_update(const Belief& b, Action a, Observation y, const ContactGraph& g, const QuarantineSet& q,
                            double p) {
    if (q.population() != b.size()) throw DimensionError("belief and quarantine dimensions differ");
    const Belief filtered = filter_observation(b, a, y);
    return predict(filtered, g, q, quarantine_after(q, a, y), p);
}

inline double marginal_infection(const Belief& b, int u, const QuarantineSet& q) {
    if (u < 1 || u > b.size()) throw ContractViolation("vertex outside [1, N]");
    if (q.contains(u)) return 0.0;
    double total = 0.0;
    for (const auto& [mask, prob] : b.probabilities())
        if (mask & vertex_bit(u)) total += prob;
    return total;
}

inline double expected_infections(const Belief& b) {
    double total = 0.0;
    for (const auto& [mask, prob] : b.probabilities()) total += prob * std::popcount(mask);
    return total;
}

// P(y | b, a).
inline double observation_probability(const Belief& b, Action a, Observation y) {
    double total = 0.0;
    for (const auto& [mask, prob] : b.probabilities())
        total += prob * observation_likelihood(SystemState(b.size(), mask), a, y);
    return total;
}

// One observation branch of an action: its probability, the next belief and
// the next quarantine set.
struct Branch {
    Observation observation = Observation::none;
    double probability = 0.0;
    Belief next;
    QuarantineSet quarantine;
};

// Positive-probability branches of action `a`, in the order none / negative / positive.
inline std::vector<Branch> branches(const Belief& b, Action a, const ContactGraph& g, const QuarantineSet& q,
                                    double p) {
    std::vector<Branch> out;
    if (!a.is_test()) {
        out.push_back({Observation::none, 1.0, belief_update(b, a, Observation::none, g, q, p), q});
        return out;
    }
    for (Observation y : {Observation::negative, Observation::positive}) {
        const double prob = observation_probability(b, a, y);
        if (prob <= 0.0) continue;
        out.push_back({y, prob, belief_update(b, a, y, g, q, p), quarantine_after(q, a, y)});
    }
    return out;
}

}  // namespace seqtest
