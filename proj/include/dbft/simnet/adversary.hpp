#pragma once

#include <functional>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "dbft/core.hpp"
#include "dbft/simnet/delay.hpp"
#include "dbft/simnet/scenario.hpp"

namespace dbft::simnet {

/// A message put on the wire on behalf of a Byzantine process.
struct Injection {
    ProcessId from = 0;
    ProcessId to = 0;
    Message msg;
    Time deliver_at = 0;
};

/// Read-only peek at non-faulty state: bin_values of (process, instance, round).
using BinValuesView = std::function<BinSet(ProcessId, InstanceTag, Round)>;

/// Rewrites traffic of Byzantine processes. Messages of non-faulty processes
/// never pass through `intercept`.
class Adversary {
public:
    Adversary() = default;
    Adversary(const Scenario& sc, std::uint64_t seed)
        : cfg_(sc.cfg), behavior_(sc.adversary.behavior), byz_(sc.adversary.resolve(sc.cfg)),
          coins_(sc.adversary.coin_script), rng_(seed) {}

    [[nodiscard]] bool is_byzantine(ProcessId p) const { return byz_.count(p) != 0; }
    [[nodiscard]] const std::set<ProcessId>& byzantine() const { return byz_; }
    [[nodiscard]] Behavior behavior() const { return behavior_; }
    [[nodiscard]] std::size_t coins_used() const { return coin_pos_; }

    /// Replacement for a message from Byzantine `from` to `to`; nullopt drops it.
    std::optional<Message> intercept(ProcessId to, Message m) {
        const bool self = m.sender == to;
        switch (behavior_) {
        case Behavior::none: return m;
        case Behavior::byz2:
        case Behavior::replay: return self ? std::optional<Message>(m) : std::nullopt;
        case Behavior::byz4:
            if (is_rb(m.kind) || self) return m;
            return std::nullopt;  // its binary traffic is replaced by injections
        case Behavior::byz1:
        case Behavior::byz3:
            if (is_rb(m.kind) || self) return m;
            if (behavior_ == Behavior::byz3 && m.kind == MsgKind::coord_value) {
                m.value = next_coin() ? BinValue::one : BinValue::zero;
                return m;
            }
            return flipped(m);
        }
        return m;
    }

    /// Byz4: called when a non-faulty process emits a binary message. The first
    /// emission for an (instance, round) opens that round for the coalition.
    std::vector<Injection> on_honest_emit(const Message& m, Time now, const BinValuesView& view) {
        std::vector<Injection> inj;
        if (behavior_ != Behavior::byz4 || is_rb(m.kind) || byz_.empty()) return inj;
        if (!opened_.insert({m.instance, m.round}).second) return inj;
        const Round r = m.round;
        const BinValue b = parity(r);
        std::vector<ProcessId> honest;
        for (ProcessId p = 1; p <= cfg_.n; ++p) {
            if (!is_byzantine(p)) honest.push_back(p);
        }
        ProcessId single = honest.front();
        for (ProcessId p : honest) {
            if (view && view(p, m.instance, r).contains(flip(b))) {
                single = p;
                break;
            }
        }
        const ProcessId coord = coordinator_of(r, cfg_);
        for (ProcessId z : byz_) {
            for (ProcessId p : honest) {
                inj.push_back({z, p, Message::b_val(m.instance, r, BinValue::zero, z), now});
                inj.push_back({z, p, Message::b_val(m.instance, r, BinValue::one, z), now});
            }
            if (z == coord) {
                for (ProcessId p : honest) inj.push_back({z, p, Message::coord(m.instance, r, flip(b), z), now});
            }
            for (ProcessId p : honest) {
                const BinSet s = p == single ? BinSet(flip(b)) : BinSet(b);
                inj.push_back({z, p, Message::aux(m.instance, r, s, z), now});
            }
        }
        return inj;
    }

    static Message flipped(Message m) {
        switch (m.kind) {
        case MsgKind::b_val:
        case MsgKind::coord_value: m.value = flip(m.value); break;
        case MsgKind::aux: {
            BinSet s;
            if (m.set.contains(BinValue::zero)) s.insert(BinValue::one);
            if (m.set.contains(BinValue::one)) s.insert(BinValue::zero);
            m.set = s;
            break;
        }
        default: break;
        }
        return m;
    }

private:
    bool next_coin() {
        if (coin_pos_ < coins_.size()) return coins_[coin_pos_++] != 0;
        ++coin_pos_;
        return (rng_() & 1u) != 0;
    }

    Config cfg_{};
    Behavior behavior_ = Behavior::none;
    std::set<ProcessId> byz_;
    std::vector<int> coins_;
    std::size_t coin_pos_ = 0;
    Rng rng_{};
    std::set<std::pair<InstanceTag, Round>> opened_;
};

}  // namespace dbft::simnet
