#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dbft/psync.hpp"
#include "dbft/simnet/report.hpp"
#include "dbft/simnet/simulator.hpp"

namespace dbft::simnet {

namespace checks {

/// Property checks over the binary instances of the non-faulty processes.
/// `inputs` holds, per process, the values that instance started with or
/// was seeded with. `from_round` is the first round the estimate-stability
/// check applies to.
struct InstanceView {
    std::vector<const Psync*> procs;
    std::vector<BinSet> inputs;
    Round from_round = 1;
    bool terminated = false;
};

inline void fail(Verdict& v, std::string detail) {
    if (!v.ok) return;
    v.ok = false;
    v.detail = std::move(detail);
}

inline void check_instance(const InstanceView& iv, const std::string& label, Verdict& agreement,
                           Verdict& validity, Verdict& singleton, Verdict& stability, Verdict& closure,
                           Verdict& halting) {
    BinSet inputs;
    for (BinSet s : iv.inputs) inputs = inputs | s;

    std::optional<BinValue> first;
    for (const Psync* p : iv.procs) {
        auto d = p->decision();
        if (!d) continue;
        if (first && *first != *d) fail(agreement, label + "two non-faulty decisions differ");
        first = d;
        if (!inputs.contains(*d)) {
            fail(validity, label + "p" + std::to_string(p->self()) + " decided " + std::to_string(to_int(*d)) +
                               " which no non-faulty process proposed");
        }
        if (p->halted() && p->halted_round() != p->decision_round() + 2) {
            fail(halting, label + "p" + std::to_string(p->self()) + " halted in round " +
                              std::to_string(p->halted_round()));
        }
    }

    // round -> record per process
    std::map<Round, std::vector<const RoundRecord*>> by_round;
    for (const Psync* p : iv.procs) {
        for (const auto& rec : p->round_log()) by_round[rec.round].push_back(&rec);
    }
    const std::size_t all = iv.procs.size();
    for (const auto& [r, recs] : by_round) {
        std::optional<BinValue> single;
        for (const RoundRecord* rec : recs) {
            if (!rec->values || !rec->values->is_singleton()) continue;
            if (single && *single != rec->values->single()) {
                fail(singleton, label + "round " + std::to_string(r) + " resolved to different singletons");
            }
            single = rec->values->single();
        }
        if (recs.size() != all) continue;

        if (r >= iv.from_round) {
            const BinValue v = recs.front()->est_in;
            const bool same = std::all_of(recs.begin(), recs.end(), [&](auto* x) { return x->est_in == v; });
            if (same) {
                for (const Psync* p : iv.procs) {
                    for (const auto& rec : p->round_log()) {
                        if (rec.round >= r && rec.est_out && *rec.est_out != v) {
                            fail(stability, label + "all entered round " + std::to_string(r) +
                                                " with the same estimate but p" + std::to_string(p->self()) +
                                                " changed it in round " + std::to_string(rec.round));
                        }
                    }
                    if (p->decision() && *p->decision() != v) {
                        fail(stability, label + "decision differs from the common estimate");
                    }
                }
            }
        }

        const bool all_single = std::all_of(recs.begin(), recs.end(), [&](auto* x) {
            return x->values && x->values->is_singleton() && *x->values == *recs.front()->values;
        });
        if (all_single) {
            for (const Psync* p : iv.procs) {
                const bool reached = iv.terminated || p->round() > r + 1 || p->halted();
                if (!reached) continue;
                if (!p->decision() || p->decision_round() > r + 1) {
                    fail(closure, label + "p" + std::to_string(p->self()) + " did not decide by round " +
                                      std::to_string(r + 1));
                }
            }
        }
    }
}

}  // namespace checks

inline RunReport Simulator::report() const {
    RunReport rep;
    rep.terminated = all_finished();
    rep.end_time = now_;
    rep.seed = sc_.seed;
    rep.total_messages = total_messages_;
    rep.trace = trace_;
    const int n = sc_.cfg.n;

    std::vector<ProcessId> honest;
    for (ProcessId p = 1; p <= n; ++p) {
        if (!is_byzantine(p)) honest.push_back(p);
    }

    for (ProcessId p = 1; p <= n; ++p) {
        ProcessOutcome o;
        o.id = p;
        o.byzantine = is_byzantine(p);
        o.decision_time = decision_time(p);
        o.decision_depth = decision_depth(p);
        if (auto* b = binary(p)) {
            const Psync& ps = b->psync();
            o.binary = ps.decision();
            o.decision_round = ps.decision_round();
            o.last_round = ps.round();
            o.halted_round = ps.halted_round();
            o.malformed = ps.malformed_count();
        } else if (auto* m = multivalue(p)) {
            const DbftNode& d = m->dbft();
            o.payload = d.decision();
            if (d.decided_index()) o.decision_round = d.decision_rounds()[static_cast<std::size_t>(*d.decided_index() - 1)];
            for (ProcessId k = 1; k <= n; ++k) o.last_round = std::max(o.last_round, d.instance(k).round());
            o.malformed = d.malformed_count();
        } else if (auto* r = rb(p)) {
            o.payload = r->rb().delivered();
        }
        rep.outcomes.push_back(o);
    }

    for (ProcessId p : honest) {
        const auto& o = rep.outcomes[static_cast<std::size_t>(p - 1)];
        if (o.binary || o.payload) rep.critical_path_delays = std::max(rep.critical_path_delays, o.decision_depth);
        if (auto* m = multivalue(p)) {
            for (Round r : m->dbft().decision_rounds()) rep.rounds_to_last_decision = std::max(rep.rounds_to_last_decision, r);
        } else {
            rep.rounds_to_last_decision = std::max(rep.rounds_to_last_decision, o.decision_round);
        }
        if (!rep.decided_value && o.binary) rep.decided_value = o.binary;
        if (!rep.decided_payload && o.payload) rep.decided_payload = o.payload;
    }

    Verdict delay{"delay_conformance", true, ""};
    if (late_after_gst_ > 0) checks::fail(delay, std::to_string(late_after_gst_) + " messages exceeded the post-GST bound");

    if (sc_.mode == RunMode::rb_only) {
        Verdict agree{"rb_agreement", true, ""};
        Verdict valid{"rb_validity", true, ""};
        std::optional<std::string> first;
        for (ProcessId p : honest) {
            const auto& d = rb(p)->rb().delivered();
            if (!d) continue;
            if (first && *first != *d) checks::fail(agree, "two non-faulty processes delivered different payloads");
            first = d;
            if (!is_byzantine(sc_.rb_sender) && *d != sc_.payloads.front()) {
                checks::fail(valid, "delivered a payload the non-faulty sender never broadcast");
            }
        }
        rep.checks = {agree, valid, delay};
        return rep;
    }

    Verdict agreement{"agreement", true, ""};
    Verdict validity{"validity", true, ""};
    Verdict singleton{"singleton_consistency", true, ""};
    Verdict stability{"estimate_stability", true, ""};
    Verdict closure{"two_round_closure", true, ""};
    Verdict halting{"halting", true, ""};

    if (sc_.mode == RunMode::binary) {
        checks::InstanceView iv;
        for (ProcessId p : honest) {
            iv.procs.push_back(&binary(p)->psync());
            iv.inputs.push_back(BinSet(binary(p)->proposal()));
        }
        iv.terminated = rep.terminated;
        checks::check_instance(iv, "", agreement, validity, singleton, stability, closure, halting);

        Verdict unanimity{"unanimity", true, ""};
        const BinValue v0 = binary(honest.front())->proposal();
        const bool unanimous = std::all_of(honest.begin(), honest.end(), [&](ProcessId p) { return binary(p)->proposal() == v0; });
        if (unanimous) {
            for (ProcessId p : honest) {
                auto d = binary(p)->psync().decision();
                if (d && *d != v0) checks::fail(unanimity, "unanimous proposal not decided");
            }
        }
        rep.checks = {agreement, validity, unanimity, singleton, stability, closure, halting, delay};
        return rep;
    }

    // multivalue
    for (ProcessId k = 1; k <= n; ++k) {
        checks::InstanceView iv;
        for (ProcessId p : honest) {
            iv.procs.push_back(&multivalue(p)->dbft().instance(k));
            iv.inputs.push_back(multivalue(p)->dbft().instance_inputs(k));
        }
        iv.from_round = 2;
        iv.terminated = rep.terminated;
        checks::check_instance(iv, "instance " + std::to_string(k) + ": ", agreement, validity, singleton, stability,
                               closure, halting);
    }

    Verdict vagree{"vpbc_agreement", true, ""};
    Verdict vvalid{"vpbc_validity", true, ""};
    Verdict unanimity{"unanimity", true, ""};
    Verdict one{"at_least_one_one", true, ""};
    Verdict shadow{"shadow_equality", true, ""};
    const ValidityPredicate valid = sc_.validity ? sc_.validity : accept_all();
    std::optional<std::string> first;
    const std::string& u = multivalue(honest.front())->proposal();
    const bool unanimous = std::all_of(honest.begin(), honest.end(), [&](ProcessId p) { return multivalue(p)->proposal() == u; }) && valid(u);
    for (ProcessId p : honest) {
        const DbftNode& d = multivalue(p)->dbft();
        if (d.shadow_mismatch()) checks::fail(shadow, "p" + std::to_string(p) + " eager and barrier decisions differ");
        if (d.all_instances_decided()) {
            const auto& bd = d.bin_decisions();
            if (std::none_of(bd.begin(), bd.end(), [](const auto& x) { return x && *x == BinValue::one; })) {
                checks::fail(one, "p" + std::to_string(p) + " saw every instance decide 0");
            }
        }
        if (!d.decision()) continue;
        if (first && *first != *d.decision()) checks::fail(vagree, "two non-faulty processes decided different payloads");
        first = d.decision();
        if (!valid(*d.decision())) checks::fail(vvalid, "decided payload fails the validity predicate");
        if (unanimous && *d.decision() != u) checks::fail(unanimity, "unanimous valid proposal not decided");
    }
    rep.checks = {vagree, vvalid, unanimity, one, shadow, agreement, validity, singleton, stability, closure, halting, delay};
    return rep;
}

}  // namespace dbft::simnet
