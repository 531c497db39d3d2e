#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "seqtest/belief.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/model.hpp"

namespace seqtest {

// Whether the policy sees this step's active edge before choosing its test.
enum class EdgeVisibility { before, after };

struct ScenarioConfig {
    int n = 1;
    int horizon = 1;
    double p = 0.0;
    double lambda = 0.0;
    ContactSchedule schedule;
    Belief initial_belief;
    std::uint64_t seed = 0;
    EdgeVisibility edge_visibility = EdgeVisibility::before;

    const ContactGraph& graph(int t) const { return schedule.at(t); }

    void validate() const {
        check_population(n);
        if (horizon < 1) throw ValidationError("horizon must be >= 1");
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p out of range");
        if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
        if (schedule.horizon() != horizon) throw ValidationError("schedule length differs from horizon");
        if (schedule.population() != n) throw ValidationError("schedule population differs from n");
        if (initial_belief.size() != n) throw ValidationError("initial belief dimension differs from n");
        if (std::abs(initial_belief.total() - 1.0) > kNormalizationTolerance)
            throw ValidationError("initial belief must sum to 1");
    }
};

namespace detail {

inline void append_hex(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    out += buf;
}

inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// Canonical text of every field that affects results (the edge-visibility flag
// included). Floating-point values are rendered exactly.
inline std::string canonical_text(const ScenarioConfig& cfg) {
    std::string s = "n=" + std::to_string(cfg.n) + ";T=" + std::to_string(cfg.horizon) + ";p=";
    detail::append_hex(s, cfg.p);
    s += ";lambda=";
    detail::append_hex(s, cfg.lambda);
    s += ";seed=" + std::to_string(cfg.seed);
    s += cfg.edge_visibility == EdgeVisibility::before ? ";vis=before" : ";vis=after";
    s += ";belief=";
    for (const auto& [mask, prob] : cfg.initial_belief.probabilities()) {
        s += SystemState(cfg.n, mask).to_string() + ":";
        detail::append_hex(s, prob);
        s += ",";
    }
    for (int t = 1; t <= cfg.horizon; ++t) {
        s += ";G" + std::to_string(t) + "=";
        for (const auto& e : cfg.graph(t).edges()) {
            s += std::to_string(e.i) + "-" + std::to_string(e.j) + ":";
            detail::append_hex(s, e.w);
            s += ",";
        }
    }
    return s;
}

// 16 hex digits identifying the scenario.
inline std::string scenario_digest(const ScenarioConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(canonical_text(cfg))));
    return buf;
}

}  // namespace seqtest
