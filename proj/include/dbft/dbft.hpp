#pragma once

#include <openssl/evp.h>

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dbft/core.hpp"
#include "dbft/psync.hpp"
#include "dbft/rb_broadcast.hpp"

namespace dbft {

using ValidityPredicate = std::function<bool(const std::string&)>;

inline ValidityPredicate accept_all() {
    return [](const std::string&) { return true; };
}

namespace chain {

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    return detail::hex_encode(std::string_view(reinterpret_cast<const char*>(md), len));
}

/// Parent digest of the first block.
inline const std::string& genesis_digest() {
    static const std::string g(64, '0');
    return g;
}

/// Block layout: `<parent digest hex>:<body>`.
inline std::string make_block(const std::string& parent, std::string_view body) {
    return parent + ":" + std::string(body);
}

inline std::optional<std::string> parent_of(const std::string& block) {
    auto pos = block.find(':');
    if (pos != 64) return std::nullopt;
    return block.substr(0, pos);
}

inline std::string digest(const std::string& block) { return sha256_hex(block); }

/// Accepts blocks that extend `parent` with a non-empty body.
inline ValidityPredicate linked_to(std::string parent) {
    return [parent = std::move(parent)](const std::string& block) {
        auto p = parent_of(block);
        return p && *p == parent && block.size() > 65;
    };
}

}  // namespace chain

enum class DbftPhase : std::uint8_t { disseminating, await_first_one, proposing_zeros, await_all, decided };

struct DbftOptions {
    PsyncOptions psync{};  // mode, opt2, mutation, catch-up for the embedded instances
    bool opt1 = true;
    bool eager = true;
    /// Byzantine hosts may propose blocks that fail their own predicate.
    bool validate_own = true;
};

/// Multivalue consensus for one process: n reliable broadcasts carry the
/// proposals and n binary instances decide which of them is kept.
///
/// Binary instance k and RB instance k both use instance tag k (1..n). The
/// final decision is reported with tag kMultivalueInstance.
class DbftNode {
public:
    DbftNode(Config cfg, ProcessId self, ValidityPredicate valid, DbftOptions opts = {})
        : cfg_(cfg), self_(self), valid_(std::move(valid)), opts_(opts) {
        cfg_.validate();
        if (!cfg_.valid_id(self)) throw ConfigError("process id out of range");
        if (!valid_) valid_ = accept_all();
        PsyncOptions po = opts_.psync;
        po.immediate_first_round = true;
        po.opt1 = opts_.opt1 && po.mode == PsyncMode::full;
        for (ProcessId k = 1; k <= cfg_.n; ++k) {
            rb_.emplace_back(cfg_, self_, k);
            bin_.emplace_back(cfg_, self_, k, po);
        }
        proposals_.resize(static_cast<std::size_t>(cfg_.n));
        bin_decisions_.resize(static_cast<std::size_t>(cfg_.n));
        decision_rounds_.assign(static_cast<std::size_t>(cfg_.n), 0);
        invoked_.assign(static_cast<std::size_t>(cfg_.n), false);
        inputs_.assign(static_cast<std::size_t>(cfg_.n), BinSet{});
    }

    void propose(const std::string& v, Time now, Outbox& out) {
        if (proposed_) throw ProtocolError("mv_propose invoked twice");
        if (opts_.validate_own && !valid_(v)) throw ProtocolError("own proposal fails the validity predicate");
        proposed_ = true;
        auto o = rb_at(self_).broadcast(v);
        emit_rb(self_, o, now, out);
    }

    void on_message(const Message& m, Time now, Outbox& out) {
        const InstanceTag k = m.instance;
        if (!cfg_.valid_id(k) || !cfg_.valid_id(m.sender)) {
            ++malformed_;
            return;
        }
        if (is_rb(m.kind)) {
            auto o = rb_at(k).on_message(m.kind, m.sender, m.data);
            emit_rb(k, o, now, out);
        } else {
            drive(k, [&](Psync& p, Outbox& o) { p.on_message(m, now, o); }, out);
        }
        drain(now, out);
    }

    void on_timer(InstanceTag k, Time now, Outbox& out) {
        if (!cfg_.valid_id(k)) return;
        drive(k, [&](Psync& p, Outbox& o) { p.on_timer(now, o); }, out);
        drain(now, out);
    }

    [[nodiscard]] DbftPhase phase() const { return phase_; }
    [[nodiscard]] const std::optional<std::string>& decision() const { return decided_; }
    [[nodiscard]] Time decision_time() const { return decided_at_; }
    /// Decision under the all-instances barrier; set once every instance decided.
    [[nodiscard]] const std::optional<std::string>& barrier_decision() const { return barrier_; }
    [[nodiscard]] bool shadow_mismatch() const { return shadow_mismatch_; }
    [[nodiscard]] std::optional<ProcessId> decided_index() const { return decided_index_; }
    [[nodiscard]] const std::vector<std::optional<std::string>>& proposals() const { return proposals_; }
    [[nodiscard]] const std::vector<std::optional<BinValue>>& bin_decisions() const { return bin_decisions_; }
    [[nodiscard]] const std::vector<Round>& decision_rounds() const { return decision_rounds_; }
    [[nodiscard]] bool invoked(ProcessId k) const { return invoked_.at(static_cast<std::size_t>(k - 1)); }
    /// Values instance k was started with or seeded with at this process.
    [[nodiscard]] BinSet instance_inputs(ProcessId k) const { return inputs_.at(static_cast<std::size_t>(k - 1)); }
    [[nodiscard]] const Psync& instance(ProcessId k) const { return bin_.at(static_cast<std::size_t>(k - 1)); }
    [[nodiscard]] const ReliableBroadcast& rb(ProcessId k) const { return rb_.at(static_cast<std::size_t>(k - 1)); }
    [[nodiscard]] int invalid_deliveries() const { return invalid_; }
    [[nodiscard]] int malformed_count() const { return malformed_; }
    [[nodiscard]] bool all_instances_decided() const {
        for (const auto& d : bin_decisions_) {
            if (!d) return false;
        }
        return true;
    }
    /// Eager decision taken and, when every instance has decided, the barrier rule agrees.
    [[nodiscard]] bool settled() const { return decided_.has_value() && barrier_.has_value(); }

private:
    ReliableBroadcast& rb_at(ProcessId k) { return rb_[static_cast<std::size_t>(k - 1)]; }
    Psync& bin_at(ProcessId k) { return bin_[static_cast<std::size_t>(k - 1)]; }
    static std::size_t idx(ProcessId k) { return static_cast<std::size_t>(k - 1); }

    void emit_rb(ProcessId k, const RbOutput& o, Time now, Outbox& out) {
        for (const auto& [kind, payload] : o.broadcast) {
            out.broadcasts.push_back(Message::rb(kind, k, payload, self_));
        }
        if (o.delivered) on_rb_deliver(k, *o.delivered, now, out);
    }

    void on_rb_deliver(ProcessId j, const std::string& v, Time now, Outbox& out) {
        if (!valid_(v)) {
            ++invalid_;
            return;
        }
        proposals_[idx(j)] = v;
        inputs_[idx(j)].insert(BinValue::one);
        drive(j, [&](Psync& p, Outbox& o) { p.seed_round_one(BinValue::one, now, o); }, out);
        if (!first_one_ && !invoked_[idx(j)]) {
            invoke(j, opts_.opt1 && opts_.psync.mode == PsyncMode::full ? ProposalInput::fast_path
                                                                       : ProposalInput::one,
                   now, out);
            if (phase_ == DbftPhase::disseminating) phase_ = DbftPhase::await_first_one;
        }
    }

    void invoke(ProcessId k, ProposalInput v, Time now, Outbox& out) {
        invoked_[idx(k)] = true;
        inputs_[idx(k)].insert(v == ProposalInput::zero ? BinValue::zero : BinValue::one);
        drive(k, [&](Psync& p, Outbox& o) { p.propose(v, now, o); }, out);
    }

    template <typename F>
    void drive(ProcessId k, F&& f, Outbox& out) {
        Outbox scratch;
        scratch.tracing = out.tracing;
        f(bin_at(k), scratch);
        for (auto& m : scratch.broadcasts) out.broadcasts.push_back(std::move(m));
        for (auto& t : scratch.timers) out.timers.push_back(t);
        for (auto& t : scratch.trace) out.trace.push_back(std::move(t));
        for (auto& d : scratch.decisions) {
            pending_.push_back(d);
            out.decisions.push_back(std::move(d));
        }
    }

    void drain(Time now, Outbox& out) {
        if (draining_) return;
        draining_ = true;
        while (!pending_.empty()) {
            DecisionEvent d = std::move(pending_.front());
            pending_.pop_front();
            on_bin_decision(d.instance, std::get<BinValue>(d.value), d.round_decided, now, out);
        }
        draining_ = false;
        try_decide(now, out);
    }

    void on_bin_decision(ProcessId k, BinValue b, Round r, Time now, Outbox& out) {
        auto& slot = bin_decisions_[idx(k)];
        if (slot) {
            if (*slot != b) throw ProtocolError("binary instance decided twice with different values");
            return;
        }
        slot = b;
        decision_rounds_[idx(k)] = r;
        if (b == BinValue::one && !first_one_) {
            first_one_ = true;
            phase_ = DbftPhase::proposing_zeros;
            for (ProcessId x = 1; x <= cfg_.n; ++x) {
                if (!invoked_[idx(x)]) invoke(x, ProposalInput::zero, now, out);
            }
            phase_ = DbftPhase::await_all;
        }
    }

    /// Smallest index whose instance decided 1, once every lower index decided 0.
    [[nodiscard]] std::optional<ProcessId> eager_index() const {
        for (ProcessId x = 1; x <= cfg_.n; ++x) {
            const auto& d = bin_decisions_[idx(x)];
            if (!d) return std::nullopt;
            if (*d == BinValue::one) return x;
        }
        return std::nullopt;
    }

    void try_decide(Time now, Outbox& out) {
        if (!barrier_ && all_instances_decided()) {
            if (auto j = eager_index(); j && proposals_[idx(*j)]) {
                barrier_ = proposals_[idx(*j)];
                if (decided_ && *decided_ != *barrier_) shadow_mismatch_ = true;
            }
        }
        if (decided_) return;
        std::optional<ProcessId> j;
        if (opts_.eager) {
            j = eager_index();
        } else if (barrier_) {
            j = eager_index();
        }
        if (!j || !proposals_[idx(*j)]) return;
        decided_ = proposals_[idx(*j)];
        decided_index_ = *j;
        decided_at_ = now;
        phase_ = DbftPhase::decided;
        if (barrier_ && *barrier_ != *decided_) shadow_mismatch_ = true;
        out.decisions.push_back(
            DecisionEvent{self_, kMultivalueInstance, *decided_, decision_rounds_[idx(*j)], now});
    }

    Config cfg_;
    ProcessId self_;
    ValidityPredicate valid_;
    DbftOptions opts_;

    std::vector<ReliableBroadcast> rb_;
    std::vector<Psync> bin_;
    std::vector<std::optional<std::string>> proposals_;
    std::vector<std::optional<BinValue>> bin_decisions_;
    std::vector<Round> decision_rounds_;
    std::vector<bool> invoked_;
    std::vector<BinSet> inputs_;
    std::deque<DecisionEvent> pending_;
    bool draining_ = false;
    bool proposed_ = false;
    bool first_one_ = false;
    DbftPhase phase_ = DbftPhase::disseminating;
    std::optional<std::string> decided_;
    std::optional<std::string> barrier_;
    std::optional<ProcessId> decided_index_;
    Time decided_at_ = 0;
    bool shadow_mismatch_ = false;
    int invalid_ = 0;
    int malformed_ = 0;
};

}  // namespace dbft
