#pragma once

// Grid-based bounds on the value function. The upper bound keeps, at each
// stage, only the alpha vectors that are minimal at some grid belief; the lower
// bound runs the recursion on grid values and interpolates between grid points
// through convex-combination certificates. The exact value lies in between.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/detail/simplex.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/model.hpp"
#include "seqtest/rng.hpp"
#include "seqtest/scenario.hpp"
#include "seqtest/solver_exact.hpp"

namespace seqtest {

struct BeliefGrid {
    std::vector<Belief> points;
    std::string descriptor;

    std::size_t size() const { return points.size(); }
};

// Every superset of a seed state. Infections never heal, so this set is closed
// under the dynamics and contains the support of every reachable belief.
inline std::vector<StateMask> upward_closure(int n, const std::vector<StateMask>& seeds) {
    std::vector<StateMask> out;
    for (StateMask s = 0; s <= full_mask(n); ++s)
        for (StateMask seed : seeds)
            if ((s & seed) == seed) {
                out.push_back(s);
                break;
            }
    return out;
}

inline std::vector<StateMask> support_states(const std::vector<Belief>& beliefs) {
    std::set<StateMask> seen;
    for (const auto& b : beliefs)
        for (const auto& [mask, prob] : b.probabilities()) seen.insert(mask);
    return {seen.begin(), seen.end()};
}

inline BeliefGrid corner_grid(int n, const std::vector<StateMask>& states) {
    BeliefGrid g{{}, "corner"};
    for (StateMask s : states) g.points.push_back(Belief::point(SystemState(n, s)));
    return g;
}

// `count` points drawn uniformly from the simplex over `states`. A larger count
// with the same seed extends the smaller grid.
inline BeliefGrid random_grid(int n, const std::vector<StateMask>& states, std::size_t count, std::uint64_t seed) {
    BeliefGrid g{{}, "uniform-random(" + std::to_string(seed) + ")"};
    Rng rng(seed);
    for (std::size_t k = 0; k < count; ++k) {
        Belief::Map m;
        for (StateMask s : states) m[s] = -std::log(1.0 - uniform01(rng));
        g.points.push_back(Belief::normalized(n, std::move(m)));
    }
    return g;
}

// Every belief over `states` whose entries are multiples of 1/resolution.
inline BeliefGrid regular_grid(int n, const std::vector<StateMask>& states, int resolution) {
    if (resolution < 1) throw ValidationError("grid resolution must be >= 1");
    BeliefGrid g{{}, "regular-grid(" + std::to_string(resolution) + ")"};
    std::vector<int> counts(states.size(), 0);
    auto emit = [&] {
        Belief::Map m;
        for (std::size_t k = 0; k < states.size(); ++k)
            if (counts[k] > 0) m[states[k]] = static_cast<double>(counts[k]) / resolution;
        g.points.push_back(Belief::normalized(n, std::move(m)));
    };
    auto rec = [&](auto& self, std::size_t k, int left) -> void {
        if (k + 1 == states.size()) {
            counts[k] = left;
            emit();
            return;
        }
        for (int c = left; c >= 0; --c) {
            counts[k] = c;
            self(self, k + 1, left - c);
        }
    };
    if (!states.empty()) rec(rec, 0, resolution);
    return g;
}

inline BeliefGrid merge(const BeliefGrid& a, const BeliefGrid& b) {
    BeliefGrid out{a.points, a.descriptor + "+" + b.descriptor};
    for (const auto& p : b.points) {
        bool dup = false;
        for (const auto& q : out.points)
            if (q.probabilities() == p.probabilities()) {
                dup = true;
                break;
            }
        if (!dup) out.points.push_back(p);
    }
    return out;
}

// Default grid: every corner of the closure of `seed_beliefs`' support plus
// `interior` random interior points.
inline BeliefGrid default_grid(int n, const std::vector<Belief>& seed_beliefs, std::size_t interior,
                               std::uint64_t seed) {
    const auto states = upward_closure(n, support_states(seed_beliefs));
    return merge(corner_grid(n, states), random_grid(n, states, interior, seed));
}

// Grid used for quarantine set q: each point pushed forward by x -> x | q.
inline BeliefGrid slice_grid(const BeliefGrid& grid, const QuarantineSet& q) {
    if (q.empty()) return grid;
    BeliefGrid out{{}, grid.descriptor};
    for (const auto& p : grid.points) {
        Belief::Map m;
        for (const auto& [mask, prob] : p.probabilities()) m[mask | q.mask()] += prob;
        Belief moved = Belief::normalized(p.size(), std::move(m));
        bool dup = false;
        for (const auto& existing : out.points)
            if (existing.probabilities() == moved.probabilities()) {
                dup = true;
                break;
            }
        if (!dup) out.points.push_back(std::move(moved));
    }
    return out;
}

// Vectors that are minimal at some grid point (lowest index on ties), in their
// original order.
inline AlphaSet prune_at_points(const AlphaSet& set, const BeliefGrid& grid) {
    if (set.vectors.empty()) throw ContractViolation("prune_at_points: empty alpha set");
    std::set<std::size_t> keep;
    for (const auto& b : grid.points) keep.insert(evaluate(set, b).argmin);
    AlphaSet out{set.n, set.t, set.quarantine, {}};
    for (std::size_t k : keep) out.vectors.push_back(set.vectors[k]);
    return out;
}

struct ApproxCaps {
    int max_n = 12;
    int max_t = 32;
    BackupOptions backup{};
};

inline void check_approx_caps(const ScenarioConfig& cfg, const ApproxCaps& caps) {
    cfg.validate();
    if (cfg.n > caps.max_n || cfg.horizon > caps.max_t)
        throw SizeError("approximate solver limited to N <= " + std::to_string(caps.max_n) +
                        " and T <= " + std::to_string(caps.max_t));
}

// Upper bound V̄_t ≥ V_t: exact backup of the pruned next-stage set, then
// pruning at the grid, stage by stage.
inline ValueFunction approx_solve_upper(const ScenarioConfig& cfg, const BeliefGrid& grid, const ApproxCaps& caps = {}) {
    check_approx_caps(cfg, caps);
    if (grid.points.empty()) throw ValidationError("grid needs at least one point");
    std::map<StateMask, BeliefGrid> grids;
    return backward_recursion(cfg, caps.backup, [&](AlphaSet set) {
        auto it = grids.find(set.quarantine.mask());
        if (it == grids.end()) it = grids.emplace(set.quarantine.mask(), slice_grid(grid, set.quarantine)).first;
        return prune_at_points(set, it->second);
    });
}

struct GridValue {
    Belief point;
    double value = 0.0;
};

// Largest value of Σ_j w_j v_j over convex combinations of grid points that
// reproduce b; empty when b is outside their convex hull.
inline std::optional<double> interpolate(const std::vector<GridValue>& table, const Belief& b) {
    std::vector<StateMask> rows;
    for (const auto& [mask, prob] : b.probabilities()) rows.push_back(mask);
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < table.size(); ++j) {
        bool inside = true;
        for (const auto& [mask, prob] : table[j].point.probabilities())
            if (b.probability(mask) <= 0.0) {
                inside = false;
                break;
            }
        if (inside) cols.push_back(j);
    }
    if (cols.empty()) return std::nullopt;
    std::vector<std::vector<double>> a(rows.size(), std::vector<double>(cols.size()));
    std::vector<double> rhs(rows.size());
    std::vector<double> c(cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rhs[i] = b.probability(rows[i]);
        for (std::size_t k = 0; k < cols.size(); ++k) a[i][k] = table[cols[k]].point.probability(rows[i]);
    }
    for (std::size_t k = 0; k < cols.size(); ++k) c[k] = table[cols[k]].value;
    const auto lp = detail::maximize_equality(a, rhs, c);
    if (!lp.feasible) return std::nullopt;
    return lp.objective;
}

inline std::string describe(const Belief& b) {
    std::string s = "{";
    for (const auto& [mask, prob] : b.probabilities())
        s += SystemState(b.size(), mask).to_string() + ":" + std::to_string(prob) + " ";
    if (s.size() > 1) s.pop_back();
    return s + "}";
}

// Lower bound ṽ_t on grid points for every (stage, quarantine set).
class LowerBound {
public:
    LowerBound(int n, int horizon) : n_(n), horizon_(horizon) {}

    int population() const { return n_; }
    int horizon() const { return horizon_; }

    void insert(int t, const QuarantineSet& q, std::vector<GridValue> table) {
        tables_.insert_or_assign({t, q.mask()}, std::move(table));
    }

    const std::vector<GridValue>& table(int t, const QuarantineSet& q) const {
        auto it = tables_.find({t, q.mask()});
        if (it == tables_.end()) throw ContractViolation("lower bound: no table for this stage and quarantine set");
        return it->second;
    }

    // Throws CoverageError when b is outside the grid's convex hull.
    double value(int t, const QuarantineSet& q, const Belief& b) const {
        auto v = interpolate(table(t, q), b);
        if (!v) throw CoverageError("belief " + describe(b) + " is outside the grid's convex hull at stage " +
                                    std::to_string(t));
        return *v;
    }

    const std::map<std::pair<int, StateMask>, std::vector<GridValue>>& tables() const { return tables_; }

private:
    int n_;
    int horizon_;
    std::map<std::pair<int, StateMask>, std::vector<GridValue>> tables_;
};

inline LowerBound approx_solve_lower(const ScenarioConfig& cfg, const BeliefGrid& grid, const ApproxCaps& caps = {}) {
    check_approx_caps(cfg, caps);
    if (grid.points.empty()) throw ValidationError("grid needs at least one point");
    LowerBound lower(cfg.n, cfg.horizon);
    for (const auto& q : reachable_quarantine_sets(cfg.n, cfg.horizon)) {
        std::vector<GridValue> table;
        for (const auto& b : slice_grid(grid, q).points) table.push_back({b, expected_infections(b)});
        lower.insert(cfg.horizon, q, std::move(table));
    }
    for (int t = cfg.horizon - 1; t >= 1; --t) {
        const StageValue next = [&lower](int s, const QuarantineSet& q, const Belief& b) { return lower.value(s, q, b); };
        for (const auto& q : reachable_quarantine_sets(cfg.n, t)) {
            std::vector<GridValue> table;
            for (const auto& b : slice_grid(grid, q).points) table.push_back({b, bellman_rhs(cfg, t, b, q, next)});
            lower.insert(t, q, std::move(table));
        }
    }
    return lower;
}

inline constexpr double kTightGap = 1e-9;

struct GapRecord {
    int t = 1;
    std::size_t probe = 0;
    double lower = 0.0;
    double upper = 0.0;
    double gap = 0.0;
    bool tight = false;
};

struct SandwichResult {
    ValueFunction upper;
    LowerBound lower;
    std::vector<GapRecord> gaps;
};

// Both bounds and their gap at every probe (empty quarantine set) and stage.
// The lower bound may use its own grid.
inline SandwichResult sandwich(const ScenarioConfig& cfg, const BeliefGrid& upper_grid, const BeliefGrid& lower_grid,
                               const std::vector<Belief>& probes, const ApproxCaps& caps = {}) {
    SandwichResult result{approx_solve_upper(cfg, upper_grid, caps), approx_solve_lower(cfg, lower_grid, caps), {}};
    const QuarantineSet empty(cfg.n);
    for (int t = 1; t <= cfg.horizon; ++t)
        for (std::size_t k = 0; k < probes.size(); ++k) {
            GapRecord r;
            r.t = t;
            r.probe = k;
            r.upper = result.upper.value(t, empty, probes[k]);
            r.lower = result.lower.value(t, empty, probes[k]);
            r.gap = r.upper - r.lower;
            r.tight = r.gap < kTightGap;
            result.gaps.push_back(r);
        }
    return result;
}

inline SandwichResult sandwich(const ScenarioConfig& cfg, const BeliefGrid& grid, const std::vector<Belief>& probes,
                               const ApproxCaps& caps = {}) {
    return sandwich(cfg, grid, grid, probes, caps);
}

}  // namespace seqtest
