#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dbft/cli/config.hpp"
#include "dbft/simnet/simulator.hpp"

namespace dbft::cli {

struct FuzzSpec {
    std::vector<int> ns{4, 7, 10};
    std::vector<simnet::Behavior> adversaries{simnet::Behavior::none, simnet::Behavior::byz1, simnet::Behavior::byz2,
                                              simnet::Behavior::byz3, simnet::Behavior::byz4};
    std::vector<simnet::DelayModel> delays{simnet::Synchronous{1}, simnet::EventuallySynchronous{200, 2, 40},
                                           simnet::BoundedAsync{1, 12}};
    int runs = 1000;
    std::uint64_t base_seed = 1;
    /// Every k-th run is a multivalue run; 0 disables them, 1 makes all runs multivalue.
    int multivalue_every = 5;
    PsyncMutation mutation = PsyncMutation::none;
    Time max_time = 400000;
    bool opt1 = true;
    bool opt2 = true;
};

/// Fuzz config layout:
///
///     { "n": [4, 7, 10], "adversaries": ["none", "byz1", ...],
///       "delay_models": [{"model": "synchronous", "d": 1}, ...],
///       "runs": 1000, "base_seed": 1, "multivalue_every": 5,
///       "mutation": "none", "max_time": 400000 }
inline FuzzSpec fuzz_spec_from_json(const json& j) {
    FuzzSpec f;
    if (j.contains("n")) f.ns = get_or<std::vector<int>>(j, "n", {});
    if (j.contains("adversaries")) {
        f.adversaries.clear();
        for (const auto& a : j.at("adversaries")) f.adversaries.push_back(simnet::behavior_from_name(a.get<std::string>()));
    }
    if (j.contains("delay_models")) {
        f.delays.clear();
        for (const auto& d : j.at("delay_models")) f.delays.push_back(delay_from_json(d));
    }
    f.runs = get_or<int>(j, "runs", f.runs);
    f.base_seed = get_or<std::uint64_t>(j, "base_seed", f.base_seed);
    f.multivalue_every = get_or<int>(j, "multivalue_every", f.multivalue_every);
    f.mutation = mutation_from_name(get_or<std::string>(j, "mutation", "none"));
    f.max_time = get_or<Time>(j, "max_time", f.max_time);
    if (f.ns.empty() || f.adversaries.empty() || f.delays.empty()) throw ConfigError("fuzz lists must be non-empty");
    if (f.runs < 0 || f.multivalue_every < 0) throw ConfigError("runs and multivalue_every must be non-negative");
    for (int n : f.ns) Config{n, (n - 1) / 3}.validate();
    for (auto b : f.adversaries) {
        if (b == simnet::Behavior::replay) throw ConfigError("replay is not a fuzz adversary");
    }
    return f;
}

/// The i-th fuzz scenario: the (n, adversary, delay) grid is walked
/// round-robin and proposals are drawn from the run's seed.
inline Scenario fuzz_scenario(const FuzzSpec& f, int i) {
    const auto ui = static_cast<std::size_t>(i);
    const std::size_t na = f.ns.size(), aa = f.adversaries.size(), da = f.delays.size();
    Scenario sc;
    sc.cfg.n = f.ns[ui % na];
    sc.cfg.t = (sc.cfg.n - 1) / 3;
    sc.adversary.behavior = f.adversaries[(ui / na) % aa];
    sc.delay = f.delays[(ui / (na * aa)) % da];
    sc.seed = f.base_seed + ui;
    sc.max_time = f.max_time;
    sc.opt1 = f.opt1;
    sc.psync.opt2 = f.opt2;
    sc.psync.mutation = f.mutation;
    const bool multivalue = f.multivalue_every > 0 && (i % f.multivalue_every) == f.multivalue_every - 1;
    simnet::Rng rng(sc.seed * 0x9e3779b97f4a7c15ULL + 3);
    const int n = sc.cfg.n;
    const auto shape = simnet::uniform(rng, 0, 3);
    if (multivalue) {
        sc.mode = simnet::RunMode::multivalue;
        sc.validity = tagged_valid;
        const auto byz = sc.adversary.resolve(sc.cfg);
        for (int p = 1; p <= n; ++p) {
            std::string body = shape == 0 ? "common" : "b" + std::to_string(p);
            if (byz.count(p) && simnet::uniform(rng, 0, 1) == 1) {
                sc.payloads.push_back("invalid:" + body);
            } else {
                sc.payloads.push_back("valid:" + body + "-" + std::to_string(sc.seed));
            }
        }
    } else {
        for (int p = 1; p <= n; ++p) {
            if (shape == 0) sc.proposals.push_back(0);
            else if (shape == 1) sc.proposals.push_back(1);
            else sc.proposals.push_back(static_cast<int>(simnet::uniform(rng, 0, 1)));
        }
    }
    return sc;
}

inline std::string describe(const Scenario& sc) {
    std::string s = "n=" + std::to_string(sc.cfg.n) + " t=" + std::to_string(sc.cfg.t) + " mode=" +
                    (sc.mode == simnet::RunMode::multivalue ? "multivalue" : "binary") +
                    " adversary=" + std::string(simnet::behavior_name(sc.adversary.behavior)) +
                    " delay=" + sc.delay.describe() + " seed=" + std::to_string(sc.seed);
    if (sc.mode == simnet::RunMode::binary) {
        s += " proposals=";
        for (int v : sc.proposals) s += std::to_string(v);
    }
    return s;
}

struct FuzzViolation {
    int run = 0;
    Scenario scenario;
    std::string check;
    std::string detail;
};

struct FuzzSummary {
    int runs = 0;
    int violations = 0;
    int es_runs = 0;
    int es_nonterminating = 0;
    int other_nonterminating = 0;
    std::optional<FuzzViolation> first_violation;
    std::optional<FuzzViolation> first_es_stall;
    /// adversary name -> rounds_to_last_decision -> count
    std::map<std::string, std::map<Round, int>> rounds;
};

/// Runs the suite. Stops at the first safety violation when `stop_on_violation`.
inline FuzzSummary run_fuzz(const FuzzSpec& f, bool stop_on_violation = true) {
    FuzzSummary s;
    for (int i = 0; i < f.runs; ++i) {
        Scenario sc = fuzz_scenario(f, i);
        simnet::Simulator sim(sc);
        auto rep = sim.run();
        ++s.runs;
        const bool es = sc.delay.eventually_synchronous();
        if (es) ++s.es_runs;
        if (!rep.terminated) {
            if (es) {
                ++s.es_nonterminating;
                if (!s.first_es_stall) s.first_es_stall = FuzzViolation{i, sc, "termination", "no decision by max_time"};
            } else {
                ++s.other_nonterminating;
            }
        } else {
            ++s.rounds[std::string(simnet::behavior_name(sc.adversary.behavior))][rep.rounds_to_last_decision];
        }
        if (auto* bad = rep.failed_check()) {
            ++s.violations;
            if (!s.first_violation) s.first_violation = FuzzViolation{i, sc, bad->name, bad->detail};
            if (stop_on_violation) break;
        }
    }
    return s;
}

}  // namespace dbft::cli
