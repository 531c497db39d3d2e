#pragma once

// Domain types of the testing model and the controlled transition kernel of
// the hidden infection process.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqtest/errors.hpp"
#include "seqtest/rng.hpp"

namespace seqtest {

// Largest population for which the 2^N state space is enumerated.
inline constexpr int kMaxIndividuals = 20;

using StateMask = std::uint32_t;

inline void check_population(int n) {
    if (n < 1 || n > kMaxIndividuals)
        throw ValidationError("population size " + std::to_string(n) + " outside [1, " +
                              std::to_string(kMaxIndividuals) + "]");
}

inline StateMask full_mask(int n) { return n >= 32 ? ~StateMask{0} : (StateMask{1} << n) - 1; }

inline StateMask vertex_bit(int i) { return StateMask{1} << (i - 1); }

// Infection indicators of all N individuals. Individual i (1-based) is bit i-1.
class SystemState {
public:
    SystemState() = default;

    SystemState(int n, StateMask bits) : n_(n), bits_(bits) {
        check_population(n);
        if ((bits & ~full_mask(n)) != 0) throw ValidationError("state has bits beyond population size");
    }

    // "101" -> individuals 1 and 3 infected.
    static SystemState parse(std::string_view text) {
        if (text.empty()) throw ValidationError("empty state string");
        StateMask bits = 0;
        for (std::size_t k = 0; k < text.size(); ++k) {
            if (text[k] == '1')
                bits |= StateMask{1} << k;
            else if (text[k] != '0')
                throw ValidationError("state string must contain only 0/1: '" + std::string(text) + "'");
        }
        return {static_cast<int>(text.size()), bits};
    }

    int size() const { return n_; }
    StateMask bits() const { return bits_; }
    bool infected(int i) const { return (bits_ & vertex_bit(i)) != 0; }
    int infections() const { return std::popcount(bits_); }

    SystemState with_infected(int i) const { return {n_, bits_ | vertex_bit(i)}; }

    std::string to_string() const {
        std::string s(static_cast<std::size_t>(n_), '0');
        for (int i = 1; i <= n_; ++i)
            if (infected(i)) s[static_cast<std::size_t>(i - 1)] = '1';
        return s;
    }

    friend bool operator==(const SystemState&, const SystemState&) = default;

private:
    int n_ = 1;
    StateMask bits_ = 0;
};

struct Edge {
    int i = 0;
    int j = 0;
    double w = 0.0;

    bool touches(int v) const { return i == v || j == v; }
    friend bool operator==(const Edge&, const Edge&) = default;
};

// Individuals removed from the contact graph after a positive test.
class QuarantineSet {
public:
    QuarantineSet() = default;
    explicit QuarantineSet(int n, StateMask members = 0) : n_(n), mask_(members) {
        check_population(n);
        if ((members & ~full_mask(n)) != 0) throw ValidationError("quarantine member outside [1, N]");
    }
    // Braced lists name members: QuarantineSet(3, {3}) is {3}, not the mask 0b11.
    QuarantineSet(int n, std::initializer_list<int> members) : QuarantineSet(n, std::vector<int>(members)) {}
    QuarantineSet(int n, const std::vector<int>& members) : QuarantineSet(n) {
        for (int v : members) {
            if (v < 1 || v > n) throw ValidationError("quarantine member " + std::to_string(v) + " outside [1, N]");
            mask_ |= vertex_bit(v);
        }
    }

    int population() const { return n_; }
    StateMask mask() const { return mask_; }
    bool contains(int v) const { return (mask_ & vertex_bit(v)) != 0; }
    bool empty() const { return mask_ == 0; }
    int size() const { return std::popcount(mask_); }
    bool subset_of(const QuarantineSet& other) const { return (mask_ & ~other.mask_) == 0; }

    QuarantineSet with(int v) const { return QuarantineSet(n_, mask_ | vertex_bit(v)); }

    std::vector<int> members() const {
        std::vector<int> out;
        for (int v = 1; v <= n_; ++v)
            if (contains(v)) out.push_back(v);
        return out;
    }

    friend bool operator==(const QuarantineSet&, const QuarantineSet&) = default;

private:
    int n_ = 1;
    StateMask mask_ = 0;
};

// Weighted undirected contact graph over individuals 1..N.
class ContactGraph {
public:
    ContactGraph() = default;
    ContactGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
        check_population(n);
        std::vector<std::pair<int, int>> seen;
        for (auto& e : edges_) {
            if (e.i < 1 || e.i > n || e.j < 1 || e.j > n)
                throw ValidationError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                      ") has a vertex outside [1, N]");
            if (e.i == e.j) throw ValidationError("self-loop on vertex " + std::to_string(e.i));
            if (!(e.w >= 0.0)) throw ValidationError("negative edge weight");
            if (e.i > e.j) std::swap(e.i, e.j);
            seen.emplace_back(e.i, e.j);
        }
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw ValidationError("duplicate edge for an unordered vertex pair");
    }

    int size() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }

    double total_weight() const {
        double total = 0.0;
        for (const auto& e : edges_) total += e.w;
        return total;
    }

private:
    int n_ = 1;
    std::vector<Edge> edges_;
};

// One contact graph per step t = 1..T.
class ContactSchedule {
public:
    ContactSchedule() = default;
    explicit ContactSchedule(std::vector<ContactGraph> graphs) : graphs_(std::move(graphs)) {
        if (graphs_.empty()) throw ValidationError("schedule needs at least one step");
        for (const auto& g : graphs_)
            if (g.size() != graphs_.front().size()) throw ValidationError("schedule graphs differ in N");
    }
    static ContactSchedule constant(const ContactGraph& g, int horizon) {
        if (horizon < 1) throw ValidationError("horizon must be >= 1");
        return ContactSchedule(std::vector<ContactGraph>(static_cast<std::size_t>(horizon), g));
    }

    int horizon() const { return static_cast<int>(graphs_.size()); }
    int population() const { return graphs_.front().size(); }
    const ContactGraph& at(int t) const {
        if (t < 1 || t > horizon()) throw ContractViolation("step " + std::to_string(t) + " outside schedule");
        return graphs_[static_cast<std::size_t>(t - 1)];
    }

private:
    std::vector<ContactGraph> graphs_;
};

// U(t): 0 = no test, i >= 1 = test individual i.
struct Action {
    int target = 0;

    static Action none() { return {}; }
    static Action test(int i) { return {i}; }
    bool is_test() const { return target != 0; }
    friend bool operator==(const Action&, const Action&) = default;
};

enum class Observation { none, negative, positive };

inline Observation observation_of(bool infected) { return infected ? Observation::positive : Observation::negative; }

struct Outcome {
    SystemState state;
    double probability = 0.0;
};

// 1 iff x and y differ in exactly one position.
inline int delta1(const SystemState& x, const SystemState& y) {
    if (x.size() != y.size()) throw DimensionError("delta1: state lengths differ");
    return std::popcount(x.bits() ^ y.bits()) == 1 ? 1 : 0;
}

// The single differing position (1-based), if there is exactly one.
inline std::optional<int> delta2(const SystemState& x, const SystemState& y) {
    if (x.size() != y.size()) throw DimensionError("delta2: state lengths differ");
    const StateMask diff = x.bits() ^ y.bits();
    if (std::popcount(diff) != 1) return std::nullopt;
    return std::countr_zero(diff) + 1;
}

inline bool edge_active(const Edge& e, const QuarantineSet& q) { return !q.contains(e.i) && !q.contains(e.j); }

inline ContactGraph active_subgraph(const ContactGraph& g, const QuarantineSet& q) {
    std::vector<Edge> kept;
    for (const auto& e : g.edges())
        if (edge_active(e, q)) kept.push_back(e);
    return ContactGraph(g.size(), std::move(kept));
}

inline double active_weight(const ContactGraph& g, const QuarantineSet& q) {
    double total = 0.0;
    for (const auto& e : g.edges())
        if (edge_active(e, q)) total += e.w;
    return total;
}

// Normalized weight of every active edge incident to u; 0 when u is quarantined
// or the active subgraph carries no weight.
inline double normalized_degree(const ContactGraph& g, const QuarantineSet& q, int u) {
    if (q.contains(u)) return 0.0;
    const double total = active_weight(g, q);
    if (total <= 0.0) return 0.0;
    double deg = 0.0;
    for (const auto& e : g.edges())
        if (edge_active(e, q) && e.touches(u)) deg += e.w;
    return deg / total;
}

// Step kernel when the active edge is drawn from the subgraph outside `drawn_from`
// and a contact is cancelled if either endpoint is in `blocked` (the quarantine set
// after this step's test). Requires drawn_from ⊆ blocked. Rows are sorted by mask.
inline std::vector<Outcome> transition_kernel(const SystemState& x, const ContactGraph& g,
                                              const QuarantineSet& drawn_from, const QuarantineSet& blocked,
                                              double p) {
    const int n = x.size();
    if (g.size() != n || drawn_from.population() != n || blocked.population() != n)
        throw DimensionError("transition_kernel: dimensions differ");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("transmission probability outside [0, 1]");
    if (!drawn_from.subset_of(blocked)) throw ContractViolation("blocking set must contain the drawing set");
    for (const auto& e : g.edges())
        if (e.w < 0.0) throw ValidationError("negative edge weight");

    std::vector<Outcome> out;
    const double total = active_weight(g, drawn_from);
    std::vector<double> gain(static_cast<std::size_t>(n) + 1, 0.0);
    double moved = 0.0;
    if (total > 0.0 && p > 0.0) {
        for (const auto& e : g.edges()) {
            if (!edge_active(e, blocked)) continue;
            const bool si = x.infected(e.i);
            const bool sj = x.infected(e.j);
            if (si == sj) continue;
            const int target = si ? e.j : e.i;
            const double mass = p * e.w / total;
            gain[static_cast<std::size_t>(target)] += mass;
            moved += mass;
        }
    }
    // self-loop vanishes when p = 1 and every active contact is infectious
    if (1.0 - moved > 1e-15) out.push_back({x, 1.0 - moved});
    for (int k = 1; k <= n; ++k)
        if (gain[static_cast<std::size_t>(k)] > 0.0) out.push_back({x.with_infected(k), gain[static_cast<std::size_t>(k)]});
    std::sort(out.begin(), out.end(), [](const Outcome& a, const Outcome& b) { return a.state.bits() < b.state.bits(); });
    return out;
}

inline std::vector<Outcome> transition_kernel(const SystemState& x, const ContactGraph& g, const QuarantineSet& q,
                                              double p) {
    return transition_kernel(x, g, q, q, p);
}

// Σ_{y≠x} P(x→y).
inline double infection_pressure(const SystemState& x, const ContactGraph& g, const QuarantineSet& drawn_from,
                                 const QuarantineSet& blocked, double p) {
    double total = 0.0;
    for (const auto& o : transition_kernel(x, g, drawn_from, blocked, p))
        if (o.state != x) total += o.probability;
    return total;
}

// Categorical draw over active edges given a uniform variate in [0, 1).
inline std::optional<Edge> sample_active_edge(const ContactGraph& g, const QuarantineSet& q, double variate) {
    const double total = active_weight(g, q);
    if (total <= 0.0) return std::nullopt;
    const double target = variate * total;
    double acc = 0.0;
    std::optional<Edge> last;
    for (const auto& e : g.edges()) {
        if (!edge_active(e, q) || e.w <= 0.0) continue;
        acc += e.w;
        last = e;
        if (target < acc) return e;
    }
    return last;
}

inline std::optional<Edge> sample_active_edge(const ContactGraph& g, const QuarantineSet& q, Rng& rng) {
    return sample_active_edge(g, q, uniform01(rng));
}

// Transmission along one contact given a uniform variate in [0, 1).
inline SystemState sample_step(const SystemState& x, const std::optional<Edge>& edge, double p, double variate) {
    if (!edge) return x;
    const bool si = x.infected(edge->i);
    const bool sj = x.infected(edge->j);
    if (si == sj || variate >= p) return x;
    return x.with_infected(si ? edge->j : edge->i);
}

inline SystemState sample_step(const SystemState& x, const std::optional<Edge>& edge, double p, Rng& rng) {
    return sample_step(x, edge, p, uniform01(rng));
}

}  // namespace seqtest
