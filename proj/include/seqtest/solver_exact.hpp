#pragma once

// Exact finite-horizon solution of the belief MDP with alpha vectors.
//
// Quarantine changes the kernel, so the solver works on the product of belief
// and quarantine set: every (stage, quarantine set) pair reachable from an
// empty quarantine set gets its own alpha set. The q = ∅ slices form the flat
// per-stage interface.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/model.hpp"
#include "seqtest/policy.hpp"
#include "seqtest/scenario.hpp"

namespace seqtest {

struct AlphaVector {
    std::vector<double> values;  // indexed by state bitmask
    Action action;

    double dot(const Belief& b) const {
        double v = 0.0;
        for (const auto& [mask, prob] : b.probabilities()) v += values[mask] * prob;
        return v;
    }
    friend bool operator==(const AlphaVector&, const AlphaVector&) = default;
};

struct AlphaSet {
    int n = 1;
    int t = 1;
    QuarantineSet quarantine;
    std::vector<AlphaVector> vectors;

    std::size_t size() const { return vectors.size(); }
};

struct Evaluation {
    double value = 0.0;
    std::size_t argmin = 0;
};

// min over vectors of the inner product; ties go to the lowest index.
inline Evaluation evaluate(const AlphaSet& set, const Belief& b) {
    if (set.vectors.empty()) throw ContractViolation("evaluate: empty alpha set");
    if (b.size() != set.n) throw DimensionError("evaluate: belief dimension differs from alpha set");
    Evaluation best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t k = 0; k < set.vectors.size(); ++k) {
        const double v = set.vectors[k].dot(b);
        if (v < best.value) best = {v, k};
    }
    return best;
}

// c_T(x) = ‖x‖₁
inline std::vector<double> infection_cost_vector(int n) {
    std::vector<double> c(static_cast<std::size_t>(full_mask(n)) + 1);
    for (std::size_t s = 0; s < c.size(); ++s) c[s] = std::popcount(static_cast<StateMask>(s));
    return c;
}

inline AlphaSet terminal_set(int n, int horizon, const QuarantineSet& q) {
    return AlphaSet{n, horizon, q, {AlphaVector{infection_cost_vector(n), Action::none()}}};
}

namespace detail {

inline constexpr double kDominanceTolerance = 1e-12;

// Canonical order: action, then lexicographic values.
inline bool canonical_less(const AlphaVector& a, const AlphaVector& b) {
    if (a.action.target != b.action.target) return a.action.target < b.action.target;
    return a.values < b.values;
}

inline bool weakly_dominates(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] > b[k] + kDominanceTolerance) return false;
    return true;
}

using SparseRow = std::vector<std::pair<StateMask, double>>;
using SparseMatrix = std::vector<SparseRow>;

// Row x of the observation-weighted kernel for branch (a, y); zero rows where
// the observation is impossible from x.
inline SparseMatrix branch_matrix(int n, const ContactGraph& g, const QuarantineSet& q, Action a, Observation y,
                                  double p) {
    const QuarantineSet blocked = quarantine_after(q, a, y);
    SparseMatrix m(static_cast<std::size_t>(full_mask(n)) + 1);
    for (StateMask s = 0; s <= full_mask(n); ++s) {
        const SystemState x(n, s);
        if (observation_likelihood(x, a, y) == 0.0) continue;
        for (const auto& o : transition_kernel(x, g, q, blocked, p)) m[s].emplace_back(o.state.bits(), o.probability);
    }
    return m;
}

inline std::vector<double> project(const SparseMatrix& m, const std::vector<double>& next) {
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t s = 0; s < m.size(); ++s)
        for (const auto& [to, prob] : m[s]) out[s] += prob * next[to];
    return out;
}

}  // namespace detail

// Removes every vector weakly dominated componentwise by another; among equal
// vectors the canonically first survives. Output is in canonical order.
inline std::vector<AlphaVector> prune_dominated(std::vector<AlphaVector> vectors) {
    std::sort(vectors.begin(), vectors.end(), detail::canonical_less);
    std::vector<std::size_t> order(vectors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> sums(vectors.size());
    for (std::size_t k = 0; k < vectors.size(); ++k)
        sums[k] = std::accumulate(vectors[k].values.begin(), vectors[k].values.end(), 0.0);
    // a dominator never has a larger sum, so it is visited first
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sums[a] < sums[b]; });

    std::vector<std::size_t> kept;
    for (std::size_t k : order) {
        bool dominated = false;
        for (std::size_t j : kept)
            if (detail::weakly_dominates(vectors[j].values, vectors[k].values)) {
                dominated = true;
                break;
            }
        if (!dominated) kept.push_back(k);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<AlphaVector> out;
    out.reserve(kept.size());
    for (std::size_t k : kept) out.push_back(std::move(vectors[k]));
    return out;
}

struct BackupOptions {
    // Upper limit on vectors produced by one backup before the solver gives up.
    std::size_t max_vectors = 250000;
};

// Next-stage alpha set for a given quarantine set.
using NextSetLookup = std::function<const AlphaSet&(const QuarantineSet&)>;

// Γ_t for quarantine set q from the stage-(t+1) sets.
inline AlphaSet exact_backup(const NextSetLookup& next, const ContactGraph& g, const QuarantineSet& q, double p,
                             double lambda, const BackupOptions& opts = {}) {
    const int n = g.size();
    if (q.population() != n) throw DimensionError("exact_backup: quarantine dimension differs from graph");
    const AlphaSet& stay = next(q);
    if (stay.n != n) throw DimensionError("exact_backup: next-stage set dimension differs from graph");
    const std::vector<double> cost = infection_cost_vector(n);

    std::vector<AlphaVector> all;
    for (Action a : admissible_actions(n, q)) {
        const double test_cost = a.is_test() ? lambda : 0.0;
        if (!a.is_test()) {
            const auto m = detail::branch_matrix(n, g, q, a, Observation::none, p);
            for (const auto& gamma : stay.vectors) {
                auto v = detail::project(m, gamma.values);
                for (std::size_t s = 0; s < v.size(); ++s) v[s] += cost[s];
                all.push_back({std::move(v), a});
            }
            continue;
        }
        std::vector<std::vector<AlphaVector>> parts;
        for (Observation y : {Observation::negative, Observation::positive}) {
            const auto m = detail::branch_matrix(n, g, q, a, y, p);
            const AlphaSet& target = next(quarantine_after(q, a, y));
            if (target.n != n) throw DimensionError("exact_backup: next-stage set dimension differs from graph");
            std::vector<AlphaVector> projected;
            for (const auto& gamma : target.vectors) projected.push_back({detail::project(m, gamma.values), a});
            parts.push_back(prune_dominated(std::move(projected)));
        }
        if (parts[0].size() * parts[1].size() > opts.max_vectors)
            throw SizeError("exact backup exceeds " + std::to_string(opts.max_vectors) +
                            " vectors; use the approximate solver");
        std::vector<AlphaVector> sums;
        sums.reserve(parts[0].size() * parts[1].size());
        for (const auto& a0 : parts[0])
            for (const auto& a1 : parts[1]) {
                std::vector<double> v(cost.size());
                for (std::size_t s = 0; s < v.size(); ++s) v[s] = cost[s] + test_cost + a0.values[s] + a1.values[s];
                sums.push_back({std::move(v), a});
            }
        auto pruned = prune_dominated(std::move(sums));
        all.insert(all.end(), std::make_move_iterator(pruned.begin()), std::make_move_iterator(pruned.end()));
    }
    return AlphaSet{n, stay.t - 1, q, prune_dominated(std::move(all))};
}

// Same next-stage set for every quarantine set (e.g. the terminal set).
inline AlphaSet exact_backup(const AlphaSet& next, const ContactGraph& g, const QuarantineSet& q, double p,
                             double lambda, const BackupOptions& opts = {}) {
    return exact_backup([&](const QuarantineSet&) -> const AlphaSet& { return next; }, g, q, p, lambda, opts);
}

// Per-(stage, quarantine set) alpha sets for t = 1..T.
class ValueFunction {
public:
    ValueFunction() = default;
    ValueFunction(int n, int horizon) : n_(n), horizon_(horizon) {}

    int population() const { return n_; }
    int horizon() const { return horizon_; }

    void insert(AlphaSet set) {
        const auto key = std::make_pair(set.t, set.quarantine.mask());
        slices_.insert_or_assign(key, std::move(set));
    }

    bool has(int t, const QuarantineSet& q) const { return slices_.count({t, q.mask()}) != 0; }

    const AlphaSet& slice(int t, const QuarantineSet& q) const {
        auto it = slices_.find({t, q.mask()});
        if (it == slices_.end())
            throw ContractViolation("no alpha set for stage " + std::to_string(t) + " and the given quarantine set");
        return it->second;
    }

    // q = ∅ slice of stage t.
    const AlphaSet& stage(int t) const { return slice(t, QuarantineSet(n_)); }

    double value(int t, const QuarantineSet& q, const Belief& b) const { return evaluate(slice(t, q), b).value; }

    const std::map<std::pair<int, StateMask>, AlphaSet>& slices() const { return slices_; }

private:
    int n_ = 1;
    int horizon_ = 1;
    std::map<std::pair<int, StateMask>, AlphaSet> slices_;
};

// Quarantine sets reachable by stage t from an empty set: at most t-1 members.
inline std::vector<QuarantineSet> reachable_quarantine_sets(int n, int t) {
    std::vector<QuarantineSet> out;
    for (StateMask m = 0; m <= full_mask(n); ++m)
        if (std::popcount(m) <= t - 1) out.emplace_back(n, m);
    return out;
}

struct SolverCaps {
    int max_n = 6;
    int max_t = 8;
    BackupOptions backup{};
};

// Backward recursion over all reachable quarantine slices. `stage_hook`, when
// set, may replace each freshly backed-up set (the approximate solver prunes
// there).
using StageHook = std::function<AlphaSet(AlphaSet)>;

inline ValueFunction backward_recursion(const ScenarioConfig& cfg, const BackupOptions& opts,
                                        const StageHook& stage_hook) {
    ValueFunction vf(cfg.n, cfg.horizon);
    for (const auto& q : reachable_quarantine_sets(cfg.n, cfg.horizon)) {
        AlphaSet terminal = terminal_set(cfg.n, cfg.horizon, q);
        vf.insert(stage_hook ? stage_hook(std::move(terminal)) : std::move(terminal));
    }
    for (int t = cfg.horizon - 1; t >= 1; --t) {
        const NextSetLookup next = [&vf, t](const QuarantineSet& q) -> const AlphaSet& { return vf.slice(t + 1, q); };
        for (const auto& q : reachable_quarantine_sets(cfg.n, t)) {
            AlphaSet set = exact_backup(next, cfg.graph(t), q, cfg.p, cfg.lambda, opts);
            set.t = t;
            vf.insert(stage_hook ? stage_hook(std::move(set)) : std::move(set));
        }
    }
    return vf;
}

inline ValueFunction solve(const ScenarioConfig& cfg, const SolverCaps& caps = {}) {
    cfg.validate();
    if (cfg.n > caps.max_n || cfg.horizon > caps.max_t)
        throw SizeError("exact solver limited to N <= " + std::to_string(caps.max_n) + " and T <= " +
                        std::to_string(caps.max_t) + "; use the approximate solver");
    return backward_recursion(cfg, caps.backup, {});
}

// Stage value Ṽ_t(b) for quarantine set q.
using StageValue = std::function<double(int t, const QuarantineSet& q, const Belief& b)>;

// λ·1{u≠0} + Σ_y P(y) Ṽ_{t+1}(b'_y, q'_y) for every admissible action, for t < T.
inline std::vector<std::pair<Action, double>> lookahead_values(const ScenarioConfig& cfg, int t, const Belief& b,
                                                               const QuarantineSet& q, const StageValue& next) {
    std::vector<std::pair<Action, double>> out;
    for (Action a : admissible_actions(cfg.n, q)) {
        double v = a.is_test() ? cfg.lambda : 0.0;
        for (const auto& br : branches(b, a, cfg.graph(t), q, cfg.p)) v += br.probability * next(t + 1, br.quarantine, br.next);
        out.emplace_back(a, v);
    }
    return out;
}

// Right-hand side of the Bellman equation with Ṽ in place of V_{t+1}.
inline double bellman_rhs(const ScenarioConfig& cfg, int t, const Belief& b, const QuarantineSet& q,
                          const StageValue& next) {
    double stage = expected_infections(b);
    if (t >= cfg.horizon) return stage;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, v] : lookahead_values(cfg, t, b, q, next)) best = std::min(best, v);
    return stage + best;
}

// Look-ahead rule: argmin_u E Ṽ_{t+1}(I_{t+1}) + λ·1{u≠0}; no test at the last step.
class LookaheadPolicy : public DeterministicPolicy {
public:
    LookaheadPolicy(std::string name, StageValue next) : name_(std::move(name)), next_(std::move(next)) {}

    std::string name() const override { return name_; }

    Action decide(const PolicyContext& ctx) const override {
        if (ctx.t >= ctx.scenario.horizon) return Action::none();
        const auto q_values = lookahead_values(ctx.scenario, ctx.t, ctx.belief, ctx.quarantine, next_);
        std::vector<double> values;
        for (const auto& [a, v] : q_values) values.push_back(v);
        return q_values[argmin_lowest(values)].first;
    }

private:
    std::string name_;
    StageValue next_;
};

// Optimal policy: one-step minimization against the stage-(t+1) alpha sets.
inline std::shared_ptr<const Policy> extract_policy(std::shared_ptr<const ValueFunction> vf) {
    return std::make_shared<LookaheadPolicy>("exact", [vf](int t, const QuarantineSet& q, const Belief& b) {
        return vf->value(t, q, b);
    });
}

// Expected total cost from stage t of a (possibly randomized) policy, by
// expanding every observation branch. The policy sees no revealed edge here.
inline double evaluate_policy_exact(const ScenarioConfig& cfg, const Policy& policy, const Belief& b, int t,
                                    const QuarantineSet& q) {
    const PolicyContext ctx{b, t, q, cfg, std::nullopt};
    double value = expected_infections(b);
    for (const auto& [a, weight] : policy.distribution(ctx)) {
        if (weight <= 0.0) continue;
        double v = a.is_test() ? cfg.lambda : 0.0;
        if (t < cfg.horizon)
            for (const auto& br : branches(b, a, cfg.graph(t), q, cfg.p))
                v += br.probability * evaluate_policy_exact(cfg, policy, br.next, t + 1, br.quarantine);
        value += weight * v;
    }
    return value;
}

inline double evaluate_policy_exact(const ScenarioConfig& cfg, const Policy& policy, const Belief& b) {
    return evaluate_policy_exact(cfg, policy, b, 1, QuarantineSet(cfg.n));
}

}  // namespace seqtest
