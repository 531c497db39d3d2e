#pragma once

// File formats: scenario files, value-function files and trace records.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqtest/belief.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/model.hpp"
#include "seqtest/scenario.hpp"
#include "seqtest/simulator.hpp"
#include "seqtest/solver_exact.hpp"

namespace seqtest {

using json = nlohmann::json;

inline constexpr int kValueFunctionFormatVersion = 1;

namespace detail {

template <typename T>
T field(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ParseError("missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError("field '" + key + "': " + e.what());
    }
}

inline std::vector<Edge> parse_edges(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError("field '" + where + "': expected a list of [i, j, w] edges");
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto& e = j[k];
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
            !e[2].is_number())
            throw ParseError("field '" + where + "[" + std::to_string(k) + "]': expected [i, j, w]");
        edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    return edges;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// A point state "101" or a list of ["101", prob] pairs.
inline Belief parse_belief(const json& j, int n, const std::string& where) {
    if (j.is_string()) {
        const auto x = SystemState::parse(j.get<std::string>());
        if (x.size() != n) throw ValidationError(where + ": state length differs from n");
        return Belief::point(x);
    }
    if (!j.is_array() || j.empty()) throw ParseError("field '" + where + "': expected a state string or [state, prob] pairs");
    Belief::Map m;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto& pair = j[k];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number())
            throw ParseError("field '" + where + "[" + std::to_string(k) + "]': expected [state, prob]");
        const auto x = SystemState::parse(pair[0].get<std::string>());
        if (x.size() != n) throw ValidationError(where + ": state length differs from n");
        if (m.count(x.bits())) throw ValidationError(where + ": duplicate state " + x.to_string());
        m[x.bits()] = pair[1].get<double>();
    }
    return Belief(n, std::move(m));
}

inline json belief_to_json(const Belief& b) {
    json out = json::array();
    for (const auto& [mask, prob] : b.probabilities()) out.push_back({SystemState(b.size(), mask).to_string(), prob});
    return out;
}

inline ScenarioConfig scenario_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("scenario must be an object");
    ScenarioConfig cfg;
    cfg.n = detail::field<int>(j, "n");
    cfg.horizon = detail::field<int>(j, "horizon");
    cfg.p = detail::field<double>(j, "p");
    cfg.lambda = detail::field<double>(j, "lambda");
    cfg.seed = j.contains("seed") ? detail::field<std::uint64_t>(j, "seed") : 0;
    if (j.contains("edge_visibility")) {
        const auto v = detail::field<std::string>(j, "edge_visibility");
        if (v == "before")
            cfg.edge_visibility = EdgeVisibility::before;
        else if (v == "after")
            cfg.edge_visibility = EdgeVisibility::after;
        else
            throw ValidationError("edge_visibility must be 'before' or 'after'");
    }
    check_population(cfg.n);
    if (cfg.horizon < 1) throw ValidationError("horizon must be >= 1");
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw ValidationError("p out of range");
    if (!(cfg.lambda >= 0.0)) throw ValidationError("lambda must be >= 0");

    if (!j.contains("graphs")) throw ParseError("missing field 'graphs'");
    const auto& graphs = j.at("graphs");
    if (graphs.is_object() && graphs.contains("static")) {
        cfg.schedule = ContactSchedule::constant(ContactGraph(cfg.n, detail::parse_edges(graphs.at("static"), "graphs.static")),
                                                 cfg.horizon);
    } else if (graphs.is_object() && graphs.contains("per_step")) {
        const auto& steps = graphs.at("per_step");
        if (!steps.is_array()) throw ParseError("field 'graphs.per_step': expected a list of edge lists");
        std::vector<ContactGraph> gs;
        for (std::size_t t = 0; t < steps.size(); ++t)
            gs.emplace_back(cfg.n, detail::parse_edges(steps[t], "graphs.per_step[" + std::to_string(t) + "]"));
        if (static_cast<int>(gs.size()) != cfg.horizon)
            throw ValidationError("graphs.per_step has " + std::to_string(gs.size()) + " steps but horizon is " +
                                  std::to_string(cfg.horizon));
        cfg.schedule = ContactSchedule(std::move(gs));
    } else {
        throw ParseError("field 'graphs': expected {\"static\": edges} or {\"per_step\": [edges, ...]}");
    }
    if (!j.contains("initial_belief")) throw ParseError("missing field 'initial_belief'");
    cfg.initial_belief = parse_belief(j.at("initial_belief"), cfg.n, "initial_belief");
    cfg.validate();
    return cfg;
}

inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ScenarioConfig load_scenario(const std::string& path) {
    const json j = parse_json_text(read_text(path), path);
    try {
        return scenario_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

// {format, version, n, horizon, stage_count, slices: [{t, quarantine, vectors: [{action, values}]}]}
inline json value_function_to_json(const ValueFunction& vf) {
    json slices = json::array();
    for (const auto& [key, set] : vf.slices()) {
        json vectors = json::array();
        for (const auto& v : set.vectors) vectors.push_back({{"action", v.action.target}, {"values", v.values}});
        slices.push_back({{"t", set.t}, {"quarantine", set.quarantine.members()}, {"vectors", std::move(vectors)}});
    }
    return {{"format", "seqtest-value-function"},
            {"version", kValueFunctionFormatVersion},
            {"n", vf.population()},
            {"horizon", vf.horizon()},
            {"stage_count", vf.horizon()},
            {"slices", std::move(slices)}};
}

inline ValueFunction value_function_from_json(const json& j) {
    if (detail::field<std::string>(j, "format") != "seqtest-value-function")
        throw ParseError("not a value-function file");
    if (detail::field<int>(j, "version") != kValueFunctionFormatVersion)
        throw ParseError("unsupported value-function format version");
    const int n = detail::field<int>(j, "n");
    const int horizon = detail::field<int>(j, "horizon");
    check_population(n);
    ValueFunction vf(n, horizon);
    const std::size_t width = static_cast<std::size_t>(full_mask(n)) + 1;
    for (const auto& s : detail::field<json>(j, "slices")) {
        AlphaSet set{n, detail::field<int>(s, "t"), QuarantineSet(n, detail::field<std::vector<int>>(s, "quarantine")), {}};
        for (const auto& v : detail::field<json>(s, "vectors")) {
            AlphaVector a{detail::field<std::vector<double>>(v, "values"), Action::test(detail::field<int>(v, "action"))};
            if (a.values.size() != width) throw DimensionError("alpha vector length differs from 2^n");
            set.vectors.push_back(std::move(a));
        }
        if (set.vectors.empty()) throw ParseError("empty alpha set in value-function file");
        vf.insert(std::move(set));
    }
    return vf;
}

inline void save_value_function(const ValueFunction& vf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << value_function_to_json(vf).dump() << '\n';
}

inline ValueFunction load_value_function(const std::string& path) {
    return value_function_from_json(parse_json_text(read_text(path), path));
}

inline json observation_to_json(Observation y) {
    switch (y) {
        case Observation::none: return nullptr;
        case Observation::negative: return 0;
        case Observation::positive: return 1;
    }
    return nullptr;
}

// One JSON object per step record, newline-terminated.
inline std::string trace_to_jsonl(const EpisodeTrace& trace, const std::string& policy) {
    std::string out;
    for (const auto& r : trace.records) {
        json line{{"digest", trace.digest},
                  {"seed", trace.seed},
                  {"policy", policy},
                  {"t", r.t},
                  {"active_edge", r.active_edge ? json::array({r.active_edge->i, r.active_edge->j}) : json(nullptr)},
                  {"action", r.action.target},
                  {"observation", observation_to_json(r.observation)},
                  {"quarantine_after", r.quarantine_after.members()},
                  {"true_state", r.true_state.to_string()},
                  {"stage_cost", r.stage_cost},
                  {"transmitted", r.transmitted}};
        out += line.dump() + "\n";
    }
    return out;
}

}  // namespace seqtest
