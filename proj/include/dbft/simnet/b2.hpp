#pragma once

#include <map>
#include <optional>
#include <vector>

#include "dbft/core.hpp"
#include "dbft/simnet/schedule.hpp"
#include "dbft/simnet/simulator.hpp"

namespace dbft::simnet {

/// Scripted adversary that keeps the naive-timer safe algorithm undecided
/// with n=4, t=1 and p4 Byzantine.
///
/// Per round r with b = r mod 2 the roles are: X = p2, m = the non-faulty
/// process whose own B_VAL[r] carries b, S = the remaining non-faulty
/// process. Timers of all three expire together at s_r + T_r. The script
///  - gives X a B_VAL(b) from p4 so X holds {0,1} before its timer,
///  - holds back b at S and m until just after the timer (S's own echo and
///    X's and S's echoes to m),
///  - hands S an AUX({not b}) from p4 and delays X's AUX to S,
/// so S resolves {not b} while X and m resolve {0,1} and move to b.
class B2Strategy final : public ScheduleController {
public:
    struct Options {
        ProcessId byzantine = 4;
        ProcessId pivot = 2;
        Time initial_timeout = 2;
        /// Stop interfering at this time (used to hand over to eventual synchrony).
        std::optional<Time> active_until;
    };

    B2Strategy() = default;
    explicit B2Strategy(Options o) : opts_(o) {}

    /// Rejects configurations the script does not apply to.
    static void require_fits(const Scenario& sc) {
        if (sc.cfg.n != 4 || sc.cfg.t != 1) throw ConfigError("the b2 schedule needs n=4, t=1");
        auto byz = sc.adversary.resolve(sc.cfg);
        if (byz != std::set<ProcessId>{4}) throw ConfigError("the b2 schedule needs p4 as the only Byzantine process");
        if (sc.mode != RunMode::binary) throw ConfigError("the b2 schedule drives binary consensus");
        if (sc.proposals.size() < 3 || sc.proposals[0] != 0 || sc.proposals[1] != 0 || sc.proposals[2] != 1) {
            throw ConfigError("the b2 schedule starts from proposals 0 0 1");
        }
        if (sc.psync.mode == PsyncMode::safe_only && !sc.psync.naive_timer) {
            throw ConfigError("the b2 schedule targets the naive-timer variant");
        }
    }

    std::optional<Time> on_send(const SendInfo& info, const Simulator& sim, std::vector<Injection>& inject) override {
        const Message& m = info.msg;
        if (opts_.active_until && info.sent >= *opts_.active_until) return std::nullopt;
        if (is_rb(m.kind) || sim.is_byzantine(info.from) || m.round < 1) return std::nullopt;
        RoundInfo& R = rounds_[m.round];
        if (m.kind == MsgKind::b_val) {
            if (!R.start) R.start = info.sent;
            if (!R.original.count(info.from)) R.original[info.from] = m.value;
        }
        if (!R.start) return std::nullopt;

        const Round r = m.round;
        const BinValue b = parity(r);
        const ProcessId X = opts_.pivot;
        const Time expiry = *R.start + opts_.initial_timeout + r;

        // X's own B_VAL(not b): p4 adds B_VAL(b) so X echoes b early.
        if (m.kind == MsgKind::b_val && info.from == X && m.value == flip(b) && !R.bval_injected &&
            R.original[X] == flip(b)) {
            R.bval_injected = true;
            inject.push_back({opts_.byzantine, X, Message::b_val(m.instance, r, b, opts_.byzantine), info.sent + 1});
            return std::nullopt;
        }

        auto roles = roles_of(R, b);
        if (!roles) return std::nullopt;
        const auto [mm, S] = *roles;

        if (m.kind == MsgKind::b_val && m.value == b) {
            if (info.from == X && info.to == mm) return expiry + 1;
            if (info.from == S && (info.to == mm || info.to == S)) return expiry + 1;
        }
        if (m.kind == MsgKind::aux) {
            if (info.from == X && info.to == S) return info.sent + 2;
            if (info.from == S && !R.aux_injected) {
                R.aux_injected = true;
                inject.push_back(
                    {opts_.byzantine, S, Message::aux(m.instance, r, BinSet(flip(b)), opts_.byzantine), info.sent + 1});
            }
        }
        return std::nullopt;
    }

private:
    struct RoundInfo {
        std::optional<Time> start;
        std::map<ProcessId, BinValue> original;
        bool bval_injected = false;
        bool aux_injected = false;
    };

    /// (m, S) once every non-faulty original is known and the round has the expected shape.
    [[nodiscard]] std::optional<std::pair<ProcessId, ProcessId>> roles_of(const RoundInfo& R, BinValue b) const {
        if (R.original.size() < 3) return std::nullopt;
        std::vector<ProcessId> with_b, without_b;
        for (const auto& [p, v] : R.original) {
            if (p == opts_.pivot) {
                if (v != flip(b)) return std::nullopt;
                continue;
            }
            (v == b ? with_b : without_b).push_back(p);
        }
        if (with_b.size() != 1 || without_b.size() != 1) return std::nullopt;
        return std::make_pair(with_b.front(), without_b.front());
    }

    Options opts_{};
    std::map<Round, RoundInfo> rounds_;
};

/// Scenario of the bundled counterexample: safe algorithm with the naive timer.
inline Scenario b2_scenario(Time max_time = 400) {
    Scenario sc;
    sc.cfg = {4, 1};
    sc.mode = RunMode::binary;
    sc.proposals = {0, 0, 1, 0};
    sc.adversary.behavior = Behavior::replay;
    sc.adversary.byzantine = {4};
    sc.psync.mode = PsyncMode::safe_only;
    sc.psync.naive_timer = true;
    sc.psync.initial_timeout = 2;
    sc.delay = Synchronous{1};
    sc.max_time = max_time;
    return sc;
}

/// Runs the strategy live and returns the schedule it produced.
inline ScheduleFile record_b2(Time max_time = 400) {
    Scenario sc = b2_scenario(max_time);
    B2Strategy strategy({4, 2, sc.psync.initial_timeout, std::nullopt});
    RecordingController rec(strategy);
    Simulator sim(sc, &rec);
    sim.run();
    return rec.file(sc, "b2");
}

}  // namespace dbft::simnet
