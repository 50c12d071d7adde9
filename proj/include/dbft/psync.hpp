#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dbft/bv_broadcast.hpp"
#include "dbft/core.hpp"
#include "dbft/values_predicate.hpp"

namespace dbft {

enum class PsyncMode : std::uint8_t {
    safe_only,  // leaderless safe algorithm, no coordinator, no timers
    full,       // weak coordinator + growing timers + catch-up
};

/// Deliberate protocol bugs used by the fuzz harness to show it catches them.
enum class PsyncMutation : std::uint8_t {
    none,
    trust_coordinator,       // adopt COORD_VALUE without checking bin_values
    decide_ignoring_parity,  // decide any singleton, even when v != r mod 2
};

struct PsyncOptions {
    PsyncMode mode = PsyncMode::full;
    /// Safe-only variant with a per-round timer armed at round entry. This is
    /// the naive timer that an adversary can exploit.
    bool naive_timer = false;
    bool opt1 = false;  // accept the -1 fast-path proposal
    bool opt2 = true;   // halt two rounds after deciding
    bool catch_up = true;
    Time initial_timeout = 0;
    /// Round 1 timers expire immediately (used inside the multivalue reduction).
    bool immediate_first_round = false;
    PsyncMutation mutation = PsyncMutation::none;
};

enum class PsyncPhase : std::uint8_t {
    idle,
    await_bin_values,
    await_first_timer,
    await_aux_quorum,
    await_second_timer,
    await_both_values,  // decided this round, Opt2 holds the round open
    halted,
};

inline std::string_view phase_name(PsyncPhase p) {
    switch (p) {
    case PsyncPhase::idle: return "idle";
    case PsyncPhase::await_bin_values: return "await_bin_values";
    case PsyncPhase::await_first_timer: return "await_first_timer";
    case PsyncPhase::await_aux_quorum: return "await_aux_quorum";
    case PsyncPhase::await_second_timer: return "await_second_timer";
    case PsyncPhase::await_both_values: return "await_both_values";
    case PsyncPhase::halted: return "halted";
    }
    return "?";
}

/// What happened to one process in one round; kept for reports and property checks.
struct RoundRecord {
    Round round = 0;
    BinValue est_in = BinValue::zero;
    Time entered = 0;
    Time timeout = 0;
    std::optional<BinSet> aux;
    std::optional<BinSet> values;
    std::optional<BinValue> est_out;
    bool first_timer_skipped = false;
    bool second_timer_skipped = false;
};

struct CatchUpSkip {
    Time time = 0;
    MiniRound at = 0;     // mini-round the process was in
    MiniRound until = 0;  // timers below this mini-round no longer wait
};

/// Counts distinct senders per mini-round. Once t+1 processes were heard
/// from a later mini-round, timer waits before it are treated as expired.
class CatchUpTracker {
public:
    CatchUpTracker() = default;
    explicit CatchUpTracker(Config cfg) : cfg_(cfg) {}

    /// Returns the new skip boundary when the rule fires.
    std::optional<MiniRound> record(ProcessId sender, MiniRound rho, MiniRound current) {
        if (rho <= current || rho <= skip_before_) return std::nullopt;
        auto& seen = senders_[rho];
        if (seen.empty()) seen.assign(static_cast<std::size_t>(cfg_.n + 1), false);
        if (seen[static_cast<std::size_t>(sender)]) return std::nullopt;
        seen[static_cast<std::size_t>(sender)] = true;
        if (++counts_[rho] < cfg_.t + 1) return std::nullopt;
        skip_before_ = rho;
        senders_.erase(senders_.begin(), senders_.upper_bound(rho));
        counts_.erase(counts_.begin(), counts_.upper_bound(rho));
        return rho;
    }

    [[nodiscard]] MiniRound skip_before() const { return skip_before_; }
    [[nodiscard]] bool skips(MiniRound m) const { return m < skip_before_; }
    [[nodiscard]] int senders_at(MiniRound rho) const {
        auto it = counts_.find(rho);
        return it == counts_.end() ? 0 : it->second;
    }

private:
    Config cfg_{};
    std::map<MiniRound, std::vector<bool>> senders_;
    std::map<MiniRound, int> counts_;
    MiniRound skip_before_ = -1;
};

/// Binary Byzantine consensus for one process and one instance.
///
/// The host feeds messages and timer expirations through a single serialized
/// stream; every handler appends what must be sent to an Outbox. Identical
/// input sequences produce identical outputs.
class Psync {
public:
    Psync(Config cfg, ProcessId self, InstanceTag instance, PsyncOptions opts = {})
        : cfg_(cfg), self_(self), instance_(instance), opts_(opts), tracker_(cfg) {
        cfg_.validate();
        if (!cfg_.valid_id(self)) throw ConfigError("process id out of range");
    }

    void propose(ProposalInput v, Time now, Outbox& out) {
        if (proposed_) throw ProtocolError("bin_propose invoked twice");
        if (v == ProposalInput::fast_path) {
            if (!opts_.opt1 || opts_.mode != PsyncMode::full) {
                throw ProtocolError("-1 is only accepted by the multivalue fast path");
            }
            fast_path_ = true;
            est_ = BinValue::one;
        } else {
            est_ = v == ProposalInput::one ? BinValue::one : BinValue::zero;
        }
        proposed_ = true;
        timeout_ = opts_.initial_timeout;
        enter_round(1, now, out);
        progress(now, out);
    }

    void on_message(const Message& m, Time now, Outbox& out) {
        if (phase_ == PsyncPhase::halted) return;
        if (!cfg_.valid_id(m.sender) || is_rb(m.kind) || m.round <= 0) {
            ++malformed_;
            return;
        }
        switch (m.kind) {
        case MsgKind::b_val: {
            auto o = slot(m.round).bv.on_b_val(m.sender, m.value);
            for (BinValue v : o.broadcast) emit(Message::b_val(instance_, m.round, v, self_), out);
            break;
        }
        case MsgKind::aux: {
            if (m.set.empty()) {
                ++malformed_;
                return;
            }
            auto& rs = slot(m.round);
            auto& from = rs.aux_from[static_cast<std::size_t>(m.sender)];
            if (!from.empty()) return;  // first AUX per sender and round wins
            from = m.set;
            rs.aux_payloads.push_back(m.set);
            break;
        }
        case MsgKind::coord_value: {
            if (m.sender != coordinator_of(m.round, cfg_)) {
                ++malformed_;
                return;
            }
            auto& rs = slot(m.round);
            if (!rs.coord_value) rs.coord_value = m.value;
            break;
        }
        default: break;
        }
        if (catch_up_enabled()) {
            if (auto until = tracker_.record(m.sender, mini_round_of_message(m), current_mini_round())) {
                skips_.push_back({now, current_mini_round(), *until});
                trace(now, "catch_up_skip", 0, out);
            }
        }
        progress(now, out);
    }

    void on_timer(Time now, Outbox& out) { progress(now, out); }

    /// Reduction hook: BV-deliver `v` into round 1 without a quorum.
    void seed_round_one(BinValue v, Time now, Outbox& out) {
        if (phase_ == PsyncPhase::halted) return;
        slot(1).bv.seed_delivery(v);
        progress(now, out);
    }

    [[nodiscard]] bool proposed() const { return proposed_; }
    [[nodiscard]] BinValue est() const { return est_; }
    [[nodiscard]] Round round() const { return r_; }
    [[nodiscard]] PsyncPhase phase() const { return phase_; }
    [[nodiscard]] bool halted() const { return phase_ == PsyncPhase::halted; }
    [[nodiscard]] std::optional<BinValue> decision() const { return decided_; }
    [[nodiscard]] Round decision_round() const { return decided_round_; }
    [[nodiscard]] Round halted_round() const { return halted_round_; }
    [[nodiscard]] Time timeout() const { return timeout_; }
    [[nodiscard]] std::optional<Time> timer_deadline() const { return deadline_; }
    [[nodiscard]] std::optional<BinSet> aux() const { return aux_; }
    [[nodiscard]] ProcessId coord() const { return coord_; }
    [[nodiscard]] int malformed_count() const { return malformed_; }
    [[nodiscard]] const std::vector<RoundRecord>& round_log() const { return log_; }
    [[nodiscard]] const std::vector<CatchUpSkip>& skips() const { return skips_; }
    [[nodiscard]] const CatchUpTracker& tracker() const { return tracker_; }
    [[nodiscard]] const PsyncOptions& options() const { return opts_; }
    [[nodiscard]] ProcessId self() const { return self_; }
    [[nodiscard]] InstanceTag instance() const { return instance_; }

    [[nodiscard]] BinSet bin_values(Round r) const {
        auto it = rounds_.find(r);
        return it == rounds_.end() ? BinSet{} : it->second.bv.delivered_set();
    }
    [[nodiscard]] std::vector<BinValue> bin_values_order(Round r) const {
        auto it = rounds_.find(r);
        return it == rounds_.end() ? std::vector<BinValue>{} : it->second.bv.delivered();
    }
    [[nodiscard]] int aux_senders(Round r) const {
        auto it = rounds_.find(r);
        return it == rounds_.end() ? 0 : static_cast<int>(it->second.aux_payloads.size());
    }

    [[nodiscard]] MiniRound current_mini_round() const {
        if (r_ < 1) return -1;
        switch (phase_) {
        case PsyncPhase::idle:
        case PsyncPhase::await_bin_values:
        case PsyncPhase::await_first_timer: return mini_round_of(r_, Phase::first);
        default: return mini_round_of(r_, Phase::second);
        }
    }

private:
    struct RoundSlot {
        BvBroadcast bv;
        std::optional<BinValue> coord_value;
        std::vector<BinSet> aux_from;      // indexed by sender; empty = nothing yet
        std::vector<BinSet> aux_payloads;  // one entry per distinct sender
    };

    RoundSlot& slot(Round r) {
        auto it = rounds_.find(r);
        if (it == rounds_.end()) {
            RoundSlot s{BvBroadcast(cfg_), std::nullopt,
                        std::vector<BinSet>(static_cast<std::size_t>(cfg_.n + 1)), {}};
            it = rounds_.emplace(r, std::move(s)).first;
        }
        return it->second;
    }

    [[nodiscard]] bool full() const { return opts_.mode == PsyncMode::full; }
    [[nodiscard]] bool catch_up_enabled() const { return full() && opts_.catch_up; }
    [[nodiscard]] bool immediate_round() const { return opts_.immediate_first_round && r_ == 1; }

    void emit(Message m, Outbox& out) { out.broadcasts.push_back(std::move(m)); }

    void trace(Time now, std::string_view event, int emitted, Outbox& out) const {
        if (!out.tracing) return;
        out.trace.push_back(TraceRecord{now, self_, instance_, r_, std::string(phase_name(phase_)),
                                        std::string(event), emitted});
    }

    void arm(Time deadline, Time now, Outbox& out) {
        deadline_ = deadline;
        if (deadline > now) out.timers.emplace_back(instance_, deadline);
    }

    /// Timer wait of the given half of the current round is over, either by
    /// expiry or because catch-up released it.
    bool timer_done(Time now, Phase half) {
        if (deadline_ && now >= *deadline_) return true;
        if (catch_up_enabled() && tracker_.skips(mini_round_of(r_, half))) {
            auto& rec = log_.back();
            (half == Phase::first ? rec.first_timer_skipped : rec.second_timer_skipped) = true;
            return true;
        }
        return false;
    }

    void enter_round(Round r, Time now, Outbox& out) {
        r_ = r;
        phase_ = PsyncPhase::await_bin_values;
        aux_.reset();
        deadline_.reset();
        coord_ = 0;
        log_.push_back(RoundRecord{r, est_, now, timeout_, {}, {}, {}, false, false});
        int sent = 0;
        if (!(r == 1 && fast_path_)) {
            auto o = slot(r).bv.broadcast(est_);
            for (BinValue v : o.broadcast) {
                emit(Message::b_val(instance_, r, v, self_), out);
                ++sent;
            }
        }
        if (!full() && opts_.naive_timer) {
            ++timeout_;
            arm(now + timeout_, now, out);
        }
        trace(now, "enter_round", sent, out);
    }

    void progress(Time now, Outbox& out) {
        if (!proposed_) return;
        while (true) {
            if (phase_ == PsyncPhase::halted || phase_ == PsyncPhase::idle) return;
            RoundSlot& rs = slot(r_);
            switch (phase_) {
            case PsyncPhase::await_bin_values: {
                if (rs.bv.delivered().empty()) return;
                int sent = 0;
                if (full()) {
                    Time duration = 0;
                    if (!immediate_round()) duration = ++timeout_;
                    round_duration_ = duration;
                    log_.back().timeout = duration;
                    arm(now + duration, now, out);
                    coord_ = coordinator_of(r_, cfg_);
                    if (coord_ == self_) {
                        emit(Message::coord(instance_, r_, rs.bv.delivered().front(), self_), out);
                        sent = 1;
                    }
                }
                phase_ = PsyncPhase::await_first_timer;
                trace(now, "bin_values_nonempty", sent, out);
                break;
            }
            case PsyncPhase::await_first_timer: {
                const bool timed = full() || opts_.naive_timer;
                if (timed && !timer_done(now, Phase::first)) return;
                aux_ = compute_aux(rs);
                log_.back().aux = aux_;
                emit(Message::aux(instance_, r_, *aux_, self_), out);
                phase_ = PsyncPhase::await_aux_quorum;
                trace(now, "aux_broadcast", 1, out);
                break;
            }
            case PsyncPhase::await_aux_quorum: {
                if (static_cast<int>(rs.aux_payloads.size()) < cfg_.quorum()) return;
                if (full()) arm(now + round_duration_, now, out);
                phase_ = PsyncPhase::await_second_timer;
                trace(now, "aux_quorum", 0, out);
                break;
            }
            case PsyncPhase::await_second_timer: {
                if (full() && !timer_done(now, Phase::second)) return;
                auto values = resolve_values(rs.aux_payloads, rs.bv.delivered_set(), cfg_.quorum(),
                                             aux_, r_);
                if (!values) return;
                finish_round(*values, now, out);
                break;
            }
            case PsyncPhase::await_both_values: {
                if (rs.bv.delivered_set() != BinSet::both()) return;
                enter_round(r_ + 1, now, out);
                break;
            }
            default: return;
            }
        }
    }

    BinSet compute_aux(RoundSlot& rs) {
        const BinSet bins = rs.bv.delivered_set();
        if (!full() || !rs.coord_value) return bins;
        const BinValue w = *rs.coord_value;
        if (bins.contains(w)) return BinSet(w);
        if (opts_.mutation == PsyncMutation::trust_coordinator) {
            rs.bv.seed_delivery(w);
            return BinSet(w);
        }
        return bins;
    }

    void finish_round(BinSet values, Time now, Outbox& out) {
        auto& rec = log_.back();
        rec.values = values;
        const BinValue b = parity(r_);
        if (values.is_singleton()) {
            const BinValue v = values.single();
            est_ = v;
            const bool may_decide = v == b || opts_.mutation == PsyncMutation::decide_ignoring_parity;
            if (may_decide && !decided_) {
                decided_ = v;
                decided_round_ = r_;
                out.decisions.push_back(DecisionEvent{self_, instance_, v, r_, now});
                trace(now, "decide", 0, out);
            }
        } else {
            est_ = b;
        }
        rec.est_out = est_;
        trace(now, "round_done", 0, out);
        if (opts_.opt2 && decided_) {
            if (decided_round_ == r_) {
                phase_ = PsyncPhase::await_both_values;
                return;
            }
            if (decided_round_ == r_ - 2) {
                phase_ = PsyncPhase::halted;
                halted_round_ = r_;
                deadline_.reset();
                trace(now, "halt", 0, out);
                return;
            }
        }
        enter_round(r_ + 1, now, out);
    }

    Config cfg_;
    ProcessId self_;
    InstanceTag instance_;
    PsyncOptions opts_;

    bool proposed_ = false;
    bool fast_path_ = false;
    BinValue est_ = BinValue::zero;
    Round r_ = 0;
    PsyncPhase phase_ = PsyncPhase::idle;
    Time timeout_ = 0;
    Time round_duration_ = 0;
    std::optional<Time> deadline_;
    std::optional<BinSet> aux_;
    ProcessId coord_ = 0;
    std::optional<BinValue> decided_;
    Round decided_round_ = 0;
    Round halted_round_ = 0;
    int malformed_ = 0;

    std::map<Round, RoundSlot> rounds_;
    CatchUpTracker tracker_;
    std::vector<RoundRecord> log_;
    std::vector<CatchUpSkip> skips_;
};

}  // namespace dbft
