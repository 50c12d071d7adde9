#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dbft/cli/config.hpp"
#include "dbft/cli/fuzz.hpp"
#include "dbft/dbft.hpp"
#include "dbft/simnet/b2.hpp"
#include "dbft/simnet/schedule.hpp"
#include "dbft/simnet/simulator.hpp"

namespace dbft::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kSafetyViolation = 2,
    kLivenessFailure = 3,
    kConfigError = 4,
};

namespace detail_cmd {

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
}

inline std::string fmt2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

}  // namespace detail_cmd

/// `run`: one scenario, report on `out`.
inline int cmd_run(const json& scenario, const Overrides& ov, std::ostream& out,
                   const std::string& trace_path = "") {
    Scenario sc = scenario_from_json(scenario);
    ov.apply(sc);
    if (!trace_path.empty()) sc.tracing = true;
    const bool expect_termination = get_or<bool>(scenario, "expect_termination", true);
    simnet::Simulator sim(sc);
    auto rep = sim.run();
    out << rep.to_text();
    if (!trace_path.empty()) detail_cmd::write_lines(trace_path, rep.trace);
    if (!rep.safety_ok()) return kSafetyViolation;
    if (!rep.terminated && expect_termination) return kLivenessFailure;
    return kOk;
}

/// Sweep file layout:
///
///     { "scenario": { ...scenario fields... },
///       "variable": "percent_zero" | "adversary" | "n",
///       "values": [0, 10, ..., 100],
///       "repetitions": 100, "base_seed": 1 }
///
/// Seeds are base_seed + run index, run index = point * repetitions + repetition.
inline int cmd_sweep(const json& spec, const Overrides& ov, std::ostream& csv, std::ostream& summary) {
    if (!spec.contains("scenario")) throw ConfigError("sweep needs a scenario template");
    const json base = spec.at("scenario");
    const auto variable = get_or<std::string>(spec, "variable", "percent_zero");
    if (!spec.contains("values") || !spec.at("values").is_array() || spec.at("values").empty()) {
        throw ConfigError("sweep needs a non-empty values list");
    }
    const int reps = get_or<int>(spec, "repetitions", 1);
    if (reps < 1) throw ConfigError("repetitions must be >= 1");
    const auto base_seed = get_or<std::uint64_t>(spec, "base_seed", ov.seed.value_or(1));
    if (variable != "percent_zero" && variable != "adversary" && variable != "n") {
        throw ConfigError("unknown sweep variable '" + variable + "'");
    }

    csv << "point,repetition,seed,decided_value,rounds_to_last_decision,critical_path_message_delays,"
           "total_messages,safety_ok\n";
    summary << "point,runs,mean_rounds,max_rounds,terminated\n";
    const auto& values = spec.at("values");
    int code = kOk;
    for (std::size_t pi = 0; pi < values.size(); ++pi) {
        const json& v = values[pi];
        const std::string label = v.is_string() ? v.get<std::string>() : v.dump();
        long total_rounds = 0;
        Round max_rounds = 0;
        int terminated = 0;
        for (int rep = 0; rep < reps; ++rep) {
            const std::uint64_t seed = base_seed + pi * static_cast<std::uint64_t>(reps) + static_cast<std::uint64_t>(rep);
            json j = base;
            j["seed"] = seed;
            j.erase("proposals");
            if (variable == "percent_zero") {
                j["percent_zero"] = v;
            } else if (variable == "adversary") {
                json a = j.value("adversary", json::object());
                a["behavior"] = v;
                j["adversary"] = a;
            } else {
                j["n"] = v;
                j["t"] = (v.get<int>() - 1) / 3;
                j.erase("payloads");
                j.erase("start_times");
            }
            Scenario sc = scenario_from_json(j);
            ov.apply(sc);
            sc.seed = seed;
            simnet::Simulator sim(sc);
            auto r = sim.run();
            csv << label << ',' << rep << ',' << seed << ',' << (r.terminated ? r.decided_string() : "") << ','
                << r.rounds_to_last_decision << ',' << r.critical_path_delays << ',' << r.total_messages << ','
                << (r.safety_ok() ? 1 : 0) << '\n';
            if (!r.safety_ok()) {
                summary << "safety violation at point " << label << " seed " << seed << ": "
                        << r.failed_check()->name << ' ' << r.failed_check()->detail << '\n';
                return kSafetyViolation;
            }
            if (r.terminated) {
                ++terminated;
                total_rounds += r.rounds_to_last_decision;
                max_rounds = std::max(max_rounds, r.rounds_to_last_decision);
            } else {
                code = kLivenessFailure;
            }
        }
        const double mean = terminated ? static_cast<double>(total_rounds) / terminated : 0.0;
        summary << label << ',' << reps << ',' << detail_cmd::fmt2(mean) << ',' << max_rounds << ',' << terminated
                << '\n';
    }
    return code;
}

/// `fuzz`: safety suite. Prints a summary; on the first violation prints the
/// scenario and seed and writes its trace to `trace_path` when given.
inline int cmd_fuzz(const json& cfg, const Overrides& ov, std::ostream& out, const std::string& trace_path = "") {
    FuzzSpec f = fuzz_spec_from_json(cfg);
    if (ov.seed) f.base_seed = *ov.seed;
    if (ov.max_time) f.max_time = *ov.max_time;
    if (ov.no_opt1) f.opt1 = false;
    if (ov.no_opt2) f.opt2 = false;
    auto s = run_fuzz(f, true);
    out << "runs " << s.runs << '\n';
    out << "violations " << s.violations << '\n';
    out << "eventually_synchronous_runs " << s.es_runs << '\n';
    out << "eventually_synchronous_nonterminating " << s.es_nonterminating << '\n';
    out << "other_nonterminating " << s.other_nonterminating << '\n';
    for (const auto& [adv, hist] : s.rounds) {
        out << "rounds " << adv;
        for (const auto& [r, c] : hist) out << ' ' << r << ':' << c;
        out << '\n';
    }
    if (s.first_violation) {
        const auto& v = *s.first_violation;
        out << "counterexample run " << v.run << ' ' << describe(v.scenario) << '\n';
        out << "violated " << v.check << ' ' << v.detail << '\n';
        if (!trace_path.empty()) {
            Scenario sc = v.scenario;
            sc.tracing = true;
            simnet::Simulator sim(sc);
            auto rep = sim.run();
            std::vector<std::string> lines{"# " + describe(sc)};
            lines.insert(lines.end(), rep.trace.begin(), rep.trace.end());
            detail_cmd::write_lines(trace_path, lines);
        }
        return kSafetyViolation;
    }
    if (s.first_es_stall) {
        out << "stalled run " << s.first_es_stall->run << ' ' << describe(s.first_es_stall->scenario) << '\n';
        return kLivenessFailure;
    }
    return kOk;
}

/// `replay`: runs a schedule file and prints per-round estimates.
///
/// With `full`, the schedule's generator is run live against the full
/// algorithm under eventual synchrony (GST = `gst`) instead of replaying the
/// recorded send ids, which only fit the configuration they were recorded with.
inline int cmd_replay(const simnet::ScheduleFile& file, bool full, const Overrides& ov, std::ostream& out,
                      Time gst = 150) {
    Scenario sc = file.scenario;
    ov.apply(sc);
    std::unique_ptr<simnet::ScheduleController> ctl;
    simnet::ReplayController* replay = nullptr;
    if (full) {
        if (file.generator != "b2") throw ConfigError("--full needs a schedule produced by the b2 generator");
        simnet::B2Strategy::require_fits(sc);
        sc.psync.mode = PsyncMode::full;
        sc.psync.naive_timer = false;
        sc.delay = simnet::EventuallySynchronous{gst, 1, 1};
        if (sc.max_time < gst * 10) sc.max_time = gst * 10;
        ctl = std::make_unique<simnet::B2Strategy>(simnet::B2Strategy::Options{4, 2, sc.psync.initial_timeout, gst});
    } else {
        if (file.generator == "b2") simnet::B2Strategy::require_fits(sc);
        auto r = std::make_unique<simnet::ReplayController>(file);
        replay = r.get();
        ctl = std::move(r);
    }
    simnet::Simulator sim(sc, ctl.get());
    auto rep = sim.run();
    out << "schedule " << (file.generator.empty() ? "custom" : file.generator) << " deliveries "
        << file.deliveries.size() << " injections " << file.injections.size() << " mode "
        << (sc.psync.mode == PsyncMode::full ? "full" : "safe-only") << '\n';
    Round last = 0;
    for (ProcessId p = 1; p <= sc.cfg.n; ++p) {
        if (!sim.is_byzantine(p)) last = std::max(last, Round(sim.psync(p)->round_log().size()));
    }
    for (Round r = 1; r <= last; ++r) {
        std::ostringstream line;
        line << "round " << r << " estimates";
        bool complete = true;
        for (ProcessId p = 1; p <= sc.cfg.n; ++p) {
            if (sim.is_byzantine(p)) continue;
            const auto& log = sim.psync(p)->round_log();
            if (static_cast<std::size_t>(r) <= log.size() && log[static_cast<std::size_t>(r - 1)].est_out) {
                line << ' ' << to_int(*log[static_cast<std::size_t>(r - 1)].est_out);
            } else {
                line << " -";
                complete = false;
            }
        }
        if (complete) out << line.str() << '\n';
    }
    if (rep.terminated) {
        out << "status decided " << rep.decided_string() << " round " << rep.rounds_to_last_decision << " time "
            << rep.end_time << '\n';
    } else {
        Round completed = last;
        for (ProcessId p = 1; p <= sc.cfg.n; ++p) {
            if (sim.is_byzantine(p)) continue;
            completed = std::min(completed, Round(sim.psync(p)->round_log().size()) - 1);
        }
        out << "status undecided after " << completed << " rounds (max_time " << sc.max_time << ")\n";
    }
    if (replay && replay->unused() > 0) out << "note " << replay->unused() << " schedule entries were not reached\n";
    for (const auto& c : rep.checks) {
        if (!c.ok) out << "check " << c.name << " VIOLATED " << c.detail << '\n';
    }
    if (!rep.safety_ok()) return kSafetyViolation;
    if (full && !rep.terminated) return kLivenessFailure;
    return kOk;
}

struct ChainHeight {
    int height = 0;
    std::string block;
    std::string digest;
    std::vector<Round> rounds;
    ProcessId proposer = 0;
};

/// Chain config layout:
///
///     { "n": 4, "t": 1, "heights": 5, "seed": 1, "max_time": 100000,
///       "delay": {...}, "adversary": {"behavior": "byz1", "byzantine": [1]},
///       "wrong_parent": true }
///
/// With `wrong_parent`, Byzantine processes propose blocks that point at a
/// bogus parent.
inline std::vector<ChainHeight> run_chain(const json& cfg, const Overrides& ov) {
    json base = cfg;
    base["mode"] = "multivalue";
    base.erase("heights");
    base.erase("wrong_parent");
    const int heights = get_or<int>(cfg, "heights", 5);
    if (heights < 1) throw ConfigError("heights must be >= 1");
    const bool wrong_parent = get_or<bool>(cfg, "wrong_parent", false);
    std::string parent = chain::genesis_digest();
    std::vector<ChainHeight> log;
    for (int h = 1; h <= heights; ++h) {
        Scenario sc = scenario_from_json(base);
        ov.apply(sc);
        sc.seed += static_cast<std::uint64_t>(h - 1);
        const auto byz = sc.adversary.resolve(sc.cfg);
        sc.payloads.clear();
        for (ProcessId p = 1; p <= sc.cfg.n; ++p) {
            const std::string body = "height-" + std::to_string(h) + "-from-p" + std::to_string(p);
            const bool bogus = wrong_parent && byz.count(p);
            sc.payloads.push_back(chain::make_block(bogus ? chain::sha256_hex("bogus-" + std::to_string(h)) : parent, body));
        }
        sc.validity = chain::linked_to(parent);
        simnet::Simulator sim(sc);
        auto rep = sim.run();
        if (!rep.safety_ok()) {
            throw ProtocolError("height " + std::to_string(h) + ": " + rep.failed_check()->name + " " +
                                rep.failed_check()->detail);
        }
        if (!rep.terminated || !rep.decided_payload) {
            throw std::runtime_error("height " + std::to_string(h) + " did not decide by max_time");
        }
        const std::string& block = *rep.decided_payload;
        if (chain::parent_of(block) != parent) {
            throw ProtocolError("height " + std::to_string(h) + " decided a block that does not extend the chain");
        }
        ChainHeight ch;
        ch.height = h;
        ch.block = block;
        ch.digest = chain::digest(block);
        for (ProcessId p = 1; p <= sc.cfg.n; ++p) {
            if (sim.is_byzantine(p)) continue;
            const auto& d = sim.multivalue(p)->dbft();
            ch.rounds = d.decision_rounds();
            ch.proposer = d.decided_index().value_or(0);
            break;
        }
        parent = ch.digest;
        log.push_back(std::move(ch));
    }
    return log;
}

/// One line per height: `height|digest|round of instance 1,...,round of instance n`.
inline std::string decision_log_line(const ChainHeight& h) {
    std::string s = std::to_string(h.height) + '|' + h.digest + '|';
    for (std::size_t i = 0; i < h.rounds.size(); ++i) s += (i ? "," : "") + std::to_string(h.rounds[i]);
    return s;
}

inline int cmd_chain(const json& cfg, const Overrides& ov, std::ostream& out) {
    std::vector<ChainHeight> log;
    try {
        log = run_chain(cfg, ov);
    } catch (const ProtocolError& e) {
        out << "chain invariant violated: " << e.what() << '\n';
        return kSafetyViolation;
    } catch (const std::runtime_error& e) {
        out << "chain stalled: " << e.what() << '\n';
        return kLivenessFailure;
    }
    for (const auto& h : log) out << decision_log_line(h) << '\n';
    return kOk;
}

}  // namespace dbft::cli
