#pragma once

// Reference value of the testing problem by brute-force expansion of the
// history tree. Shares no code with the alpha-vector solver or the belief
// recursion: next-state distributions come from enumerating every active edge
// and transmission outcome directly.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "seqtest/belief.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/model.hpp"
#include "seqtest/scenario.hpp"

namespace seqtest {

struct OracleCaps {
    double max_nodes = 2e7;
};

namespace detail {

using Dist = std::map<StateMask, double>;

class TreeOracle {
public:
    explicit TreeOracle(const ScenarioConfig& cfg) : cfg_(cfg) {}

    double value(int t, const Dist& dist, StateMask quarantined) const {
        double stage = 0.0;
        for (const auto& [x, prob] : dist) stage += prob * std::popcount(x);
        if (t == cfg_.horizon) return stage;

        double best = std::numeric_limits<double>::infinity();
        // every u in [0, N], quarantined individuals included
        for (int u = 0; u <= cfg_.n; ++u) {
            double total = u == 0 ? 0.0 : cfg_.lambda;
            const int outcomes = u == 0 ? 1 : 2;
            for (int y = 0; y < outcomes; ++y) {
                Dist next;
                double mass = 0.0;
                StateMask blocked = quarantined;
                if (u != 0 && y == 1) blocked |= StateMask{1} << (u - 1);
                for (const auto& [x, prob] : dist) {
                    if (u != 0 && (((x >> (u - 1)) & 1U) != static_cast<unsigned>(y))) continue;
                    mass += prob;
                    spread(x, prob, t, quarantined, blocked, next);
                }
                if (mass <= 0.0) continue;
                for (auto& [x, w] : next) w /= mass;
                total += mass * value(t + 1, next, blocked);
            }
            best = std::min(best, total);
        }
        return stage + best;
    }

private:
    // Adds the successors of state x, carrying weight `prob`, to `next`.
    void spread(StateMask x, double prob, int t, StateMask drawn_from, StateMask blocked, Dist& next) const {
        const auto& edges = cfg_.graph(t).edges();
        double total = 0.0;
        for (const auto& e : edges)
            if (!in(drawn_from, e.i) && !in(drawn_from, e.j)) total += e.w;
        if (total <= 0.0) {
            next[x] += prob;
            return;
        }
        for (const auto& e : edges) {
            if (in(drawn_from, e.i) || in(drawn_from, e.j) || e.w <= 0.0) continue;
            const double pe = prob * e.w / total;
            const bool ii = in(x, e.i);
            const bool ij = in(x, e.j);
            if (in(blocked, e.i) || in(blocked, e.j) || ii == ij) {
                next[x] += pe;
                continue;
            }
            const StateMask infected = x | (StateMask{1} << ((ii ? e.j : e.i) - 1));
            next[infected] += pe * cfg_.p;
            next[x] += pe * (1.0 - cfg_.p);
        }
    }

    static bool in(StateMask set, int v) { return ((set >> (v - 1)) & 1U) != 0; }

    const ScenarioConfig& cfg_;
};

}  // namespace detail

// Minimal expected total cost from stage t0 with belief b0 and quarantine set q0.
inline double oracle_value(const ScenarioConfig& cfg, const Belief& b0, int t0, const QuarantineSet& q0,
                           const OracleCaps& caps = {}) {
    cfg.validate();
    if (b0.size() != cfg.n || q0.population() != cfg.n) throw DimensionError("oracle: dimensions differ");
    if (t0 < 1 || t0 > cfg.horizon) throw ContractViolation("oracle: start stage outside [1, T]");
    const double nodes = std::pow(2.0 * cfg.n + 1.0, cfg.horizon - t0);
    if (nodes > caps.max_nodes)
        throw SizeError("oracle tree of about " + std::to_string(nodes) + " nodes exceeds the cap");
    detail::Dist dist(b0.probabilities().begin(), b0.probabilities().end());
    return detail::TreeOracle(cfg).value(t0, dist, q0.mask());
}

inline double oracle_value(const ScenarioConfig& cfg, const Belief& b0) {
    return oracle_value(cfg, b0, 1, QuarantineSet(cfg.n));
}

}  // namespace seqtest
