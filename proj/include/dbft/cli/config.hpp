#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbft/core.hpp"
#include "dbft/simnet/scenario.hpp"

namespace dbft::cli {

using nlohmann::json;
using simnet::Scenario;

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

inline simnet::DelayModel delay_from_json(const json& j) {
    const auto model = get_or<std::string>(j, "model", "synchronous");
    if (model == "synchronous") return simnet::Synchronous{get_or<Time>(j, "d", 1)};
    if (model == "eventually-synchronous") {
        return simnet::EventuallySynchronous{get_or<Time>(j, "gst", 100), get_or<Time>(j, "d", 1),
                                             get_or<Time>(j, "pre_gst_max", 20)};
    }
    if (model == "bounded-async") return simnet::BoundedAsync{get_or<Time>(j, "min", 1), get_or<Time>(j, "max", 10)};
    throw ConfigError("unknown delay model '" + model + "'");
}

inline json delay_to_json(const simnet::DelayModel& d) {
    if (auto* s = std::get_if<simnet::Synchronous>(&d.mode())) return {{"model", "synchronous"}, {"d", s->d}};
    if (auto* e = std::get_if<simnet::EventuallySynchronous>(&d.mode())) {
        return {{"model", "eventually-synchronous"}, {"gst", e->gst}, {"d", e->d}, {"pre_gst_max", e->pre_gst_max}};
    }
    const auto& b = std::get<simnet::BoundedAsync>(d.mode());
    return {{"model", "bounded-async"}, {"min", b.min}, {"max", b.max}};
}

inline PsyncMutation mutation_from_name(const std::string& s) {
    if (s == "none") return PsyncMutation::none;
    if (s == "trust-coordinator") return PsyncMutation::trust_coordinator;
    if (s == "decide-ignoring-parity") return PsyncMutation::decide_ignoring_parity;
    throw ConfigError("unknown mutation '" + s + "'");
}

inline std::string mutation_name(PsyncMutation m) {
    switch (m) {
    case PsyncMutation::none: return "none";
    case PsyncMutation::trust_coordinator: return "trust-coordinator";
    case PsyncMutation::decide_ignoring_parity: return "decide-ignoring-parity";
    }
    return "none";
}

/// Flags that override scenario fields.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<Time> max_time;
    bool no_opt1 = false;
    bool no_opt2 = false;
    bool safe_only = false;
    bool naive_timer = false;
    bool trace = false;

    void apply(Scenario& sc) const {
        if (seed) sc.seed = *seed;
        if (max_time) sc.max_time = *max_time;
        if (no_opt1) sc.opt1 = false;
        if (no_opt2) sc.psync.opt2 = false;
        if (safe_only) sc.psync.mode = PsyncMode::safe_only;
        if (naive_timer) {
            sc.psync.mode = PsyncMode::safe_only;
            sc.psync.naive_timer = true;
        }
        if (trace) sc.tracing = true;
    }
};

/// Multivalue payload validity used by scenario files: `valid:` prefix.
inline bool tagged_valid(const std::string& v) { return v.rfind("valid:", 0) == 0; }

/// Scenario file layout:
///
///     { "n": 4, "t": 1, "mode": "binary" | "multivalue",
///       "delay": {"model": "eventually-synchronous", "gst": 100, "d": 1, "pre_gst_max": 20},
///       "adversary": {"behavior": "byz3", "byzantine": [1]},
///       "proposals": [0, 1, 1, 0]  or  "percent_zero": 50,
///       "payloads": ["valid:a", ...],  "validity": "accept-all" | "tagged",
///       "seed": 1, "max_time": 100000, "opt1": true, "opt2": true,
///       "psync": {"mode": "full", "naive_timer": false, "initial_timeout": 0, "catch_up": true,
///                 "mutation": "none"},
///       "start_times": [0, 0, 0, 50], "processing_delay": 0, "expect_termination": true }
inline Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    Scenario sc;
    sc.cfg.n = get_or<int>(j, "n", 4);
    sc.cfg.t = get_or<int>(j, "t", (sc.cfg.n - 1) / 3);
    sc.cfg.validate();
    const auto mode = get_or<std::string>(j, "mode", "binary");
    if (mode == "binary") sc.mode = simnet::RunMode::binary;
    else if (mode == "multivalue") sc.mode = simnet::RunMode::multivalue;
    else throw ConfigError("mode must be binary or multivalue");
    if (j.contains("delay")) sc.delay = delay_from_json(j.at("delay"));
    if (j.contains("adversary")) {
        const auto& a = j.at("adversary");
        sc.adversary.behavior = simnet::behavior_from_name(get_or<std::string>(a, "behavior", "none"));
        sc.adversary.byzantine = get_or<std::vector<ProcessId>>(a, "byzantine", {});
        sc.adversary.coin_script = get_or<std::vector<int>>(a, "coins", {});
    }
    sc.seed = get_or<std::uint64_t>(j, "seed", 1);
    sc.max_time = get_or<Time>(j, "max_time", 100000);
    sc.opt1 = get_or<bool>(j, "opt1", true);
    sc.psync.opt2 = get_or<bool>(j, "opt2", true);
    if (j.contains("psync")) {
        const auto& p = j.at("psync");
        const auto pm = get_or<std::string>(p, "mode", "full");
        if (pm == "full") sc.psync.mode = PsyncMode::full;
        else if (pm == "safe-only") sc.psync.mode = PsyncMode::safe_only;
        else throw ConfigError("psync.mode must be full or safe-only");
        sc.psync.naive_timer = get_or<bool>(p, "naive_timer", false);
        sc.psync.initial_timeout = get_or<Time>(p, "initial_timeout", 0);
        sc.psync.catch_up = get_or<bool>(p, "catch_up", true);
        sc.psync.mutation = mutation_from_name(get_or<std::string>(p, "mutation", "none"));
    }
    sc.start_times = get_or<std::vector<Time>>(j, "start_times", {});
    sc.processing_delay = get_or<Time>(j, "processing_delay", 0);
    const int n = sc.cfg.n;
    if (sc.mode == simnet::RunMode::binary) {
        if (j.contains("proposals")) {
            sc.proposals = get_or<std::vector<int>>(j, "proposals", {});
        } else {
            sc.proposals = simnet::proposals_with_zero_share(n, get_or<int>(j, "percent_zero", 0), sc.seed);
        }
    } else {
        if (j.contains("payloads")) {
            sc.payloads = get_or<std::vector<std::string>>(j, "payloads", {});
        } else {
            for (int p = 1; p <= n; ++p) sc.payloads.push_back("valid:block-" + std::to_string(p));
        }
        const auto v = get_or<std::string>(j, "validity", "accept-all");
        if (v == "tagged") sc.validity = tagged_valid;
        else if (v != "accept-all") throw ConfigError("validity must be accept-all or tagged");
    }
    sc.validate();
    return sc;
}

}  // namespace dbft::cli
