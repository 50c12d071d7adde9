#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dbft/core.hpp"

namespace dbft {

struct RbOutput {
    std::vector<std::pair<MsgKind, std::string>> broadcast;
    std::optional<std::string> delivered;
};

/// Bracha reliable broadcast, one instance per sender of record.
///
/// INIT from the sender triggers ECHO; ECHO from ceil((n+t+1)/2) distinct
/// processes or READY from t+1 triggers READY; READY from 2t+1 delivers.
/// Each process echoes and readies at most once, so at most one payload is
/// ever delivered per instance.
class ReliableBroadcast {
public:
    ReliableBroadcast() = default;
    ReliableBroadcast(Config cfg, ProcessId self, ProcessId sender_of_record)
        : cfg_(cfg), self_(self), sender_(sender_of_record) {}

    [[nodiscard]] int echo_threshold() const { return (cfg_.n + cfg_.t + 2) / 2; }
    [[nodiscard]] int ready_amplify_threshold() const { return cfg_.t + 1; }
    [[nodiscard]] int deliver_threshold() const { return 2 * cfg_.t + 1; }

    RbOutput broadcast(std::string payload) {
        if (self_ != sender_) throw ProtocolError("rb_broadcast invoked by a non-sender");
        if (invoked_) throw ProtocolError("rb_broadcast invoked twice");
        invoked_ = true;
        RbOutput out;
        out.broadcast.emplace_back(MsgKind::rb_init, std::move(payload));
        return out;
    }

    RbOutput on_message(MsgKind kind, ProcessId from, const std::string& payload) {
        RbOutput out;
        if (!cfg_.valid_id(from)) return out;
        switch (kind) {
        case MsgKind::rb_init:
            if (from == sender_ && !echoed_) {
                echoed_ = payload;
                out.broadcast.emplace_back(MsgKind::rb_echo, payload);
            }
            break;
        case MsgKind::rb_echo: echo_[payload].insert(from); break;
        case MsgKind::rb_ready: ready_[payload].insert(from); break;
        default: return out;
        }
        if (!readied_) {
            const auto e = count(echo_, payload);
            const auto r = count(ready_, payload);
            if (e >= echo_threshold() || r >= ready_amplify_threshold()) {
                readied_ = payload;
                out.broadcast.emplace_back(MsgKind::rb_ready, payload);
            }
        }
        if (!delivered_ && count(ready_, payload) >= deliver_threshold()) {
            delivered_ = payload;
            out.delivered = payload;
        }
        return out;
    }

    [[nodiscard]] ProcessId sender_of_record() const { return sender_; }
    [[nodiscard]] const std::optional<std::string>& delivered() const { return delivered_; }
    [[nodiscard]] const std::optional<std::string>& echoed_payload() const { return echoed_; }
    [[nodiscard]] const std::optional<std::string>& readied_payload() const { return readied_; }

private:
    static int count(const std::map<std::string, std::set<ProcessId>>& m, const std::string& key) {
        auto it = m.find(key);
        return it == m.end() ? 0 : static_cast<int>(it->second.size());
    }

    Config cfg_{};
    ProcessId self_ = 0;
    ProcessId sender_ = 0;
    bool invoked_ = false;
    std::map<std::string, std::set<ProcessId>> echo_;
    std::map<std::string, std::set<ProcessId>> ready_;
    std::optional<std::string> echoed_;
    std::optional<std::string> readied_;
    std::optional<std::string> delivered_;
};

}  // namespace dbft
