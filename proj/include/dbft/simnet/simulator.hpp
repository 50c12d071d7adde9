#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dbft/core.hpp"
#include "dbft/dbft.hpp"
#include "dbft/psync.hpp"
#include "dbft/simnet/adversary.hpp"
#include "dbft/simnet/delay.hpp"
#include "dbft/simnet/event_queue.hpp"
#include "dbft/simnet/node.hpp"
#include "dbft/simnet/report.hpp"
#include "dbft/simnet/scenario.hpp"

namespace dbft::simnet {

class Simulator;

struct Envelope {
    std::uint64_t id = 0;
    ProcessId from = 0;
    ProcessId to = 0;
    Message msg;
    Time sent = 0;
    Time deliver = 0;
    int depth = 0;
};

struct SendInfo {
    std::uint64_t id = 0;
    ProcessId from = 0;
    ProcessId to = 0;
    const Message& msg;
    Time sent = 0;
    Time default_deliver = 0;
};

/// Hook that sees every network send (after adversary rewriting) and may
/// override its delivery time or put Byzantine messages on the wire.
class ScheduleController {
public:
    virtual ~ScheduleController() = default;
    /// Returns an absolute delivery time, or nullopt for the delay model's choice.
    virtual std::optional<Time> on_send(const SendInfo& info, const Simulator& sim,
                                        std::vector<Injection>& inject) = 0;
};

class Simulator {
public:
    explicit Simulator(Scenario sc, ScheduleController* ctl = nullptr)
        : sc_(std::move(sc)), ctl_(ctl), rng_(sc_.seed), adversary_(sc_, sc_.seed * 0x2545f4914f6cdd1dULL + 7) {
        sc_.validate();
        const int n = sc_.cfg.n;
        depth_.assign(static_cast<std::size_t>(n + 1), 0);
        decision_depth_.assign(static_cast<std::size_t>(n + 1), 0);
        decision_time_.assign(static_cast<std::size_t>(n + 1), -1);
        finished_.assign(static_cast<std::size_t>(n + 1), false);
        nodes_.emplace_back(nullptr);
        const ValidityPredicate valid = sc_.validity ? sc_.validity : accept_all();
        for (ProcessId p = 1; p <= n; ++p) {
            const auto i = static_cast<std::size_t>(p - 1);
            switch (sc_.mode) {
            case RunMode::binary:
                nodes_.push_back(std::make_unique<BinaryNode>(sc_.cfg, p, bin_from_int(sc_.proposals[i]), sc_.psync));
                break;
            case RunMode::multivalue: {
                DbftOptions o;
                o.psync = sc_.psync;
                o.opt1 = sc_.opt1;
                o.eager = sc_.eager;
                o.validate_own = !(is_byzantine(p) && sc_.byzantine_skip_validation);
                nodes_.push_back(std::make_unique<MultivalueNode>(sc_.cfg, p, sc_.payloads[i], valid, o));
                break;
            }
            case RunMode::rb_only:
                nodes_.push_back(std::make_unique<RbNode>(sc_.cfg, p, sc_.rb_sender, sc_.payloads.front()));
                break;
            }
        }
        for (ProcessId p = 1; p <= n; ++p) {
            if (is_byzantine(p)) ++byz_count_;
            queue_.push(sc_.start_of(p), Event{EventKind::start, p, 0, {}});
        }
    }

    /// Processes one event. Throws on an empty queue.
    void step() {
        auto e = queue_.pop();
        now_ = e.time;
        Event& ev = e.payload;
        const ProcessId p = ev.target;
        Outbox out;
        out.tracing = sc_.tracing;
        Node& node = *nodes_[static_cast<std::size_t>(p)];
        switch (ev.kind) {
        case EventKind::start: node.start(now_, out); break;
        case EventKind::deliver:
            depth_[static_cast<std::size_t>(p)] = std::max(depth_[static_cast<std::size_t>(p)], ev.env.depth);
            if (sc_.tracing) {
                trace_.push_back("D|" + std::to_string(now_) + '|' + std::to_string(ev.env.from) + '|' +
                                 std::to_string(p) + '|' + std::to_string(ev.env.id) + '|' + serialize(ev.env.msg));
            }
            node.on_message(ev.env.msg, now_, out);
            break;
        case EventKind::timer: node.on_timer(ev.tag, now_, out); break;
        }
        dispatch(p, out);
        if (!finished_[static_cast<std::size_t>(p)] && node.finished()) {
            finished_[static_cast<std::size_t>(p)] = true;
            if (!is_byzantine(p)) ++finished_count_;
        }
    }

    /// Runs until every non-faulty process is finished, the queue drains, or max_time passes.
    RunReport run() {
        while (!all_finished() && !queue_.empty() && queue_.top().time <= sc_.max_time) step();
        return report();
    }

    [[nodiscard]] bool all_finished() const { return finished_count_ == sc_.cfg.n - byz_count_; }
    [[nodiscard]] bool queue_empty() const { return queue_.empty(); }
    [[nodiscard]] Time now() const { return now_; }
    [[nodiscard]] const Scenario& scenario() const { return sc_; }
    [[nodiscard]] const Config& config() const { return sc_.cfg; }
    [[nodiscard]] bool is_byzantine(ProcessId p) const { return adversary_.is_byzantine(p); }
    [[nodiscard]] const Adversary& adversary() const { return adversary_; }
    [[nodiscard]] std::uint64_t total_messages() const { return total_messages_; }
    [[nodiscard]] std::uint64_t late_after_gst() const { return late_after_gst_; }
    [[nodiscard]] const std::vector<std::string>& trace() const { return trace_; }

    [[nodiscard]] const Node& node(ProcessId p) const { return *nodes_.at(static_cast<std::size_t>(p)); }
    [[nodiscard]] const BinaryNode* binary(ProcessId p) const { return dynamic_cast<const BinaryNode*>(&node(p)); }
    [[nodiscard]] const MultivalueNode* multivalue(ProcessId p) const {
        return dynamic_cast<const MultivalueNode*>(&node(p));
    }
    [[nodiscard]] const RbNode* rb(ProcessId p) const { return dynamic_cast<const RbNode*>(&node(p)); }

    /// Binary instance k of process p (k ignored in binary mode).
    [[nodiscard]] const Psync* psync(ProcessId p, InstanceTag k = kStandaloneInstance) const {
        if (auto* b = binary(p)) return &b->psync();
        if (auto* m = multivalue(p); m && sc_.cfg.valid_id(k)) return &m->dbft().instance(k);
        return nullptr;
    }

    [[nodiscard]] BinSet bin_values(ProcessId p, InstanceTag k, Round r) const {
        const Psync* ps = psync(p, k);
        return ps ? ps->bin_values(r) : BinSet{};
    }

    [[nodiscard]] int decision_depth(ProcessId p) const { return decision_depth_[static_cast<std::size_t>(p)]; }
    [[nodiscard]] Time decision_time(ProcessId p) const { return decision_time_[static_cast<std::size_t>(p)]; }

    RunReport report() const;

private:
    enum class EventKind : std::uint8_t { start, deliver, timer };
    struct Event {
        EventKind kind = EventKind::start;
        ProcessId target = 0;
        InstanceTag tag = 0;
        Envelope env;
    };

    [[nodiscard]] InstanceTag final_tag() const {
        switch (sc_.mode) {
        case RunMode::binary: return kStandaloneInstance;
        case RunMode::multivalue: return kMultivalueInstance;
        case RunMode::rb_only: return sc_.rb_sender;
        }
        return kStandaloneInstance;
    }

    void dispatch(ProcessId p, Outbox& out) {
        const auto i = static_cast<std::size_t>(p);
        for (const auto& [tag, deadline] : out.timers) {
            queue_.push(std::max(deadline, now_), Event{EventKind::timer, p, tag, {}});
        }
        for (const auto& d : out.decisions) {
            if (d.instance == final_tag() && decision_time_[i] < 0) {
                decision_time_[i] = now_;
                decision_depth_[i] = depth_[i];
            }
        }
        if (sc_.tracing) {
            for (const auto& t : out.trace) trace_.push_back(t.to_string());
        }
        const Time sent = now_ + sc_.processing_delay;
        for (const auto& m : out.broadcasts) send(p, m, sent);
    }

    void send(ProcessId from, const Message& msg, Time sent) {
        const int depth = depth_[static_cast<std::size_t>(from)] + 1;
        const bool byz = is_byzantine(from);
        if (!byz && adversary_.behavior() == Behavior::byz4) {
            auto view = [this](ProcessId q, InstanceTag k, Round r) { return bin_values(q, k, r); };
            for (auto& inj : adversary_.on_honest_emit(msg, sent, view)) inject(inj, sent);
        }
        for (ProcessId to = 1; to <= sc_.cfg.n; ++to) {
            if (byz) {
                auto m = adversary_.intercept(to, msg);
                if (!m) continue;
                enqueue(from, to, std::move(*m), sent, depth);
            } else {
                enqueue(from, to, msg, sent, depth);
            }
        }
    }

    void enqueue(ProcessId from, ProcessId to, Message m, Time sent, int depth) {
        Envelope env{next_id_++, from, to, std::move(m), sent, 0, depth};
        env.deliver = sc_.delay.arrival(sent, rng_);
        std::vector<Injection> inj;
        if (ctl_) {
            if (auto t = ctl_->on_send(SendInfo{env.id, from, to, env.msg, sent, env.deliver}, *this, inj)) {
                if (*t < sent) throw ConfigError("schedule delivers message " + std::to_string(env.id) + " before it is sent");
                env.deliver = *t;
            }
        }
        note_delay(env);
        ++total_messages_;
        queue_.push(env.deliver, Event{EventKind::deliver, to, 0, std::move(env)});
        for (auto& x : inj) inject(x, sent);
    }

    void inject(const Injection& x, Time sent) {
        if (!is_byzantine(x.from)) throw ConfigError("injection from non-faulty process " + std::to_string(x.from));
        if (!sc_.cfg.valid_id(x.to)) throw ConfigError("injection to unknown process");
        if (x.deliver_at < sent) throw ConfigError("injection delivered before it is sent");
        Message m = x.msg;
        m.sender = x.from;
        Envelope env{next_id_++, x.from, x.to, std::move(m), sent, x.deliver_at,
                     depth_[static_cast<std::size_t>(x.from)] + 1};
        ++total_messages_;
        queue_.push(env.deliver, Event{EventKind::deliver, x.to, 0, std::move(env)});
    }

    void note_delay(const Envelope& env) {
        if (is_byzantine(env.from) || !sc_.delay.eventually_synchronous()) return;
        auto gst = sc_.delay.stabilization();
        if (gst && env.sent >= *gst && env.deliver - env.sent > sc_.delay.bound()) ++late_after_gst_;
    }

    Scenario sc_;
    ScheduleController* ctl_;
    Rng rng_;
    Adversary adversary_;
    EventQueue<Event> queue_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<int> depth_;
    std::vector<int> decision_depth_;
    std::vector<Time> decision_time_;
    std::vector<bool> finished_;
    int finished_count_ = 0;
    int byz_count_ = 0;
    Time now_ = 0;
    std::uint64_t next_id_ = 0;
    std::uint64_t total_messages_ = 0;
    std::uint64_t late_after_gst_ = 0;
    std::vector<std::string> trace_;
};

}  // namespace dbft::simnet

#include "dbft/simnet/checks.hpp"
