#pragma once

#include <optional>
#include <string>

#include "dbft/core.hpp"
#include "dbft/dbft.hpp"
#include "dbft/psync.hpp"
#include "dbft/rb_broadcast.hpp"

namespace dbft::simnet {

/// A simulated process. All inputs arrive through these three handlers.
class Node {
public:
    virtual ~Node() = default;
    virtual void start(Time now, Outbox& out) = 0;
    virtual void on_message(const Message& m, Time now, Outbox& out) = 0;
    virtual void on_timer(InstanceTag k, Time now, Outbox& out) = 0;
    /// The run may stop once every non-faulty node is finished.
    [[nodiscard]] virtual bool finished() const = 0;
};

class BinaryNode final : public Node {
public:
    BinaryNode(Config cfg, ProcessId self, BinValue proposal, PsyncOptions opts)
        : psync_(cfg, self, kStandaloneInstance, opts), proposal_(proposal) {}

    void start(Time now, Outbox& out) override {
        psync_.propose(proposal_ == BinValue::one ? ProposalInput::one : ProposalInput::zero, now, out);
    }
    void on_message(const Message& m, Time now, Outbox& out) override {
        if (m.instance != kStandaloneInstance || is_rb(m.kind)) return;
        psync_.on_message(m, now, out);
    }
    void on_timer(InstanceTag, Time now, Outbox& out) override { psync_.on_timer(now, out); }
    [[nodiscard]] bool finished() const override { return psync_.decision().has_value(); }

    [[nodiscard]] const Psync& psync() const { return psync_; }
    [[nodiscard]] BinValue proposal() const { return proposal_; }

private:
    Psync psync_;
    BinValue proposal_;
};

class MultivalueNode final : public Node {
public:
    MultivalueNode(Config cfg, ProcessId self, std::string proposal, ValidityPredicate valid, DbftOptions opts)
        : node_(cfg, self, std::move(valid), opts), proposal_(std::move(proposal)) {}

    void start(Time now, Outbox& out) override { node_.propose(proposal_, now, out); }
    void on_message(const Message& m, Time now, Outbox& out) override { node_.on_message(m, now, out); }
    void on_timer(InstanceTag k, Time now, Outbox& out) override { node_.on_timer(k, now, out); }
    [[nodiscard]] bool finished() const override { return node_.settled(); }

    [[nodiscard]] const DbftNode& dbft() const { return node_; }
    [[nodiscard]] const std::string& proposal() const { return proposal_; }

private:
    DbftNode node_;
    std::string proposal_;
};

/// Runs a single reliable broadcast from `sender`. Delivery is reported as a
/// DecisionEvent tagged with the sender id.
class RbNode final : public Node {
public:
    RbNode(Config cfg, ProcessId self, ProcessId sender, std::string payload)
        : rb_(cfg, self, sender), self_(self), payload_(std::move(payload)) {}

    void start(Time now, Outbox& out) override {
        if (self_ != rb_.sender_of_record()) return;
        emit(rb_.broadcast(payload_), now, out);
    }
    void on_message(const Message& m, Time now, Outbox& out) override {
        if (!is_rb(m.kind) || m.instance != rb_.sender_of_record()) return;
        emit(rb_.on_message(m.kind, m.sender, m.data), now, out);
    }
    void on_timer(InstanceTag, Time, Outbox&) override {}
    [[nodiscard]] bool finished() const override { return rb_.delivered().has_value(); }

    [[nodiscard]] const ReliableBroadcast& rb() const { return rb_; }

private:
    void emit(const RbOutput& o, Time now, Outbox& out) {
        for (const auto& [kind, payload] : o.broadcast) {
            out.broadcasts.push_back(Message::rb(kind, rb_.sender_of_record(), payload, self_));
        }
        if (o.delivered) {
            out.decisions.push_back(DecisionEvent{self_, rb_.sender_of_record(), *o.delivered, 0, now});
        }
    }

    ReliableBroadcast rb_;
    ProcessId self_;
    std::string payload_;
};

}  // namespace dbft::simnet
