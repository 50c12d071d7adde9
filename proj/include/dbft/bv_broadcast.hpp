#pragma once

#include <array>
#include <vector>

#include "dbft/core.hpp"

namespace dbft {

/// Result of feeding one input into a BV-broadcast instance.
struct BvOutput {
    std::vector<BinValue> broadcast;  // B_VAL values to send to all
    std::vector<BinValue> delivered;  // values that just entered bin_values
};

/// Binary-value broadcast for one (instance, round). Echoes a value once it
/// was received from t+1 distinct senders and delivers it at 2t+1, so a value
/// sent only by Byzantine processes never reaches `delivered()`.
class BvBroadcast {
public:
    BvBroadcast() = default;
    explicit BvBroadcast(Config cfg) : cfg_(cfg), seen_(2 * (cfg.n + 1), false) {}

    /// Local BV_broadcast. One-shot per instance and round. If the value was
    /// already echoed through the receive path nothing is re-sent.
    BvOutput broadcast(BinValue v) {
        if (invoked_) throw ProtocolError("bv_broadcast invoked twice for the same round");
        invoked_ = true;
        BvOutput out;
        if (!echoed_[to_int(v)]) {
            echoed_[to_int(v)] = true;
            out.broadcast.push_back(v);
        }
        return out;
    }

    BvOutput on_b_val(ProcessId sender, BinValue v) {
        BvOutput out;
        if (!cfg_.valid_id(sender)) return out;
        const int idx = to_int(v);
        if (seen_[slot(sender, v)]) return out;
        seen_[slot(sender, v)] = true;
        const int count = ++count_[idx];
        if (count >= cfg_.t + 1 && !echoed_[idx]) {
            echoed_[idx] = true;
            out.broadcast.push_back(v);
        }
        if (count >= 2 * cfg_.t + 1 && !contains(v)) {
            deliver(v);
            out.delivered.push_back(v);
        }
        return out;
    }

    /// Injects `v` as delivered without a quorum (used by the multivalue
    /// reduction once a proposal was reliably delivered).
    std::vector<BinValue> seed_delivery(BinValue v) {
        seeded_[to_int(v)] = true;
        if (contains(v)) return {};
        deliver(v);
        return {v};
    }

    /// Insertion-ordered bin_values.
    [[nodiscard]] const std::vector<BinValue>& delivered() const { return delivered_; }
    [[nodiscard]] BinSet delivered_set() const { return delivered_set_; }
    [[nodiscard]] bool contains(BinValue v) const { return delivered_set_.contains(v); }
    [[nodiscard]] bool echoed(BinValue v) const { return echoed_[to_int(v)]; }
    [[nodiscard]] bool invoked() const { return invoked_; }
    [[nodiscard]] bool externally_seeded(BinValue v) const { return seeded_[to_int(v)]; }
    [[nodiscard]] int sender_count(BinValue v) const { return count_[to_int(v)]; }

private:
    [[nodiscard]] std::size_t slot(ProcessId p, BinValue v) const {
        return static_cast<std::size_t>(2 * p + to_int(v));
    }
    void deliver(BinValue v) {
        delivered_.push_back(v);
        delivered_set_.insert(v);
    }

    Config cfg_{};
    std::vector<bool> seen_;
    std::array<int, 2> count_{0, 0};
    std::array<bool, 2> echoed_{false, false};
    std::array<bool, 2> seeded_{false, false};
    std::vector<BinValue> delivered_;
    BinSet delivered_set_{};
    bool invoked_ = false;
};

}  // namespace dbft
