#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbft/core.hpp"
#include "dbft/simnet/simulator.hpp"

namespace dbft::simnet {

struct DeliverOverride {
    std::uint64_t send_id = 0;
    Time time = 0;
};

struct AnchoredInjection {
    std::uint64_t anchor = 0;  // injected right after this send
    Injection inj;
};

/// A replayable schedule: the run configuration plus every delivery-time
/// override and every Byzantine injection, keyed by send id.
///
/// Text format, one directive per line, `#` starts a comment:
///
///     n 4
///     t 1
///     byzantine 4
///     proposals 0 0 1 0
///     mode safe-only            (or: full)
///     naive-timer on            (or: off)
///     initial-timeout 2
///     max-time 400
///     seed 1
///     delay synchronous 1       (or: eventually-synchronous gst d pre_max | bounded-async min max)
///     generator b2              (optional, names the script that produced the file)
///     deliver <send_id> <time>
///     inject <anchor_send_id> <deliver_at> <to> <message>
///
/// `<message>` uses the canonical `kind|instance|round|payload|sender` form.
struct ScheduleFile {
    Scenario scenario;
    std::string generator;
    std::vector<DeliverOverride> deliveries;
    std::vector<AnchoredInjection> injections;
};

namespace detail_schedule {

inline std::string join_ids(const std::vector<ProcessId>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

inline DelayModel parse_delay(std::istringstream& is) {
    std::string kind;
    is >> kind;
    if (kind == "synchronous") {
        Synchronous s;
        if (!(is >> s.d)) throw ConfigError("delay synchronous needs d");
        return DelayModel(s);
    }
    if (kind == "eventually-synchronous") {
        EventuallySynchronous e;
        if (!(is >> e.gst >> e.d >> e.pre_gst_max)) throw ConfigError("delay eventually-synchronous needs gst d pre_max");
        return DelayModel(e);
    }
    if (kind == "bounded-async") {
        BoundedAsync b;
        if (!(is >> b.min >> b.max)) throw ConfigError("delay bounded-async needs min max");
        return DelayModel(b);
    }
    throw ConfigError("unknown delay model '" + kind + "'");
}

}  // namespace detail_schedule

inline ScheduleFile parse_schedule(std::istream& in) {
    ScheduleFile f;
    Scenario& sc = f.scenario;
    sc.adversary.behavior = Behavior::replay;
    sc.psync.mode = PsyncMode::safe_only;
    bool have_n = false, have_t = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        auto bad = [&](const std::string& why) {
            return ConfigError("schedule line " + std::to_string(lineno) + ": " + why);
        };
        try {
            if (key == "n") {
                if (!(is >> sc.cfg.n)) throw bad("n needs a value");
                have_n = true;
            } else if (key == "t") {
                if (!(is >> sc.cfg.t)) throw bad("t needs a value");
                have_t = true;
            } else if (key == "byzantine") {
                ProcessId p;
                while (is >> p) sc.adversary.byzantine.push_back(p);
            } else if (key == "proposals") {
                int v;
                sc.proposals.clear();
                while (is >> v) sc.proposals.push_back(v);
            } else if (key == "mode") {
                std::string m;
                is >> m;
                if (m == "safe-only") sc.psync.mode = PsyncMode::safe_only;
                else if (m == "full") sc.psync.mode = PsyncMode::full;
                else throw bad("mode must be safe-only or full");
            } else if (key == "naive-timer") {
                std::string v;
                is >> v;
                sc.psync.naive_timer = v == "on";
            } else if (key == "initial-timeout") {
                if (!(is >> sc.psync.initial_timeout)) throw bad("initial-timeout needs a value");
            } else if (key == "max-time") {
                if (!(is >> sc.max_time)) throw bad("max-time needs a value");
            } else if (key == "seed") {
                if (!(is >> sc.seed)) throw bad("seed needs a value");
            } else if (key == "delay") {
                sc.delay = detail_schedule::parse_delay(is);
            } else if (key == "generator") {
                is >> f.generator;
            } else if (key == "deliver") {
                DeliverOverride d;
                if (!(is >> d.send_id >> d.time)) throw bad("deliver needs <send_id> <time>");
                f.deliveries.push_back(d);
            } else if (key == "inject") {
                AnchoredInjection a;
                std::string msg;
                if (!(is >> a.anchor >> a.inj.deliver_at >> a.inj.to >> msg)) {
                    throw bad("inject needs <anchor> <deliver_at> <to> <message>");
                }
                a.inj.msg = parse_message(msg);
                a.inj.from = a.inj.msg.sender;
                f.injections.push_back(std::move(a));
            } else {
                throw bad("unknown directive '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw bad(e.what());
        }
    }
    if (!have_n || !have_t) throw ConfigError("schedule must set n and t");
    sc.validate();
    for (const auto& a : f.injections) {
        if (!sc.adversary.resolve(sc.cfg).count(a.inj.from)) {
            throw ConfigError("schedule injects a message from non-faulty process " + std::to_string(a.inj.from));
        }
    }
    return f;
}

inline ScheduleFile load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schedule file " + path);
    return parse_schedule(in);
}

inline void write_schedule(std::ostream& os, const ScheduleFile& f) {
    const Scenario& sc = f.scenario;
    os << "n " << sc.cfg.n << '\n' << "t " << sc.cfg.t << '\n';
    const auto byz = sc.adversary.resolve(sc.cfg);
    os << "byzantine " << detail_schedule::join_ids(std::vector<ProcessId>(byz.begin(), byz.end())) << '\n';
    os << "proposals";
    for (int v : sc.proposals) os << ' ' << v;
    os << '\n';
    os << "mode " << (sc.psync.mode == PsyncMode::full ? "full" : "safe-only") << '\n';
    os << "naive-timer " << (sc.psync.naive_timer ? "on" : "off") << '\n';
    os << "initial-timeout " << sc.psync.initial_timeout << '\n';
    os << "max-time " << sc.max_time << '\n';
    os << "seed " << sc.seed << '\n';
    os << "delay " << sc.delay.describe() << '\n';
    if (!f.generator.empty()) os << "generator " << f.generator << '\n';
    // deliveries and injections interleaved by send id
    std::size_t di = 0, ii = 0;
    while (di < f.deliveries.size() || ii < f.injections.size()) {
        const bool take_d = ii == f.injections.size() ||
                            (di < f.deliveries.size() && f.deliveries[di].send_id <= f.injections[ii].anchor);
        if (take_d) {
            os << "deliver " << f.deliveries[di].send_id << ' ' << f.deliveries[di].time << '\n';
            ++di;
        } else {
            const auto& a = f.injections[ii++];
            Message m = a.inj.msg;
            m.sender = a.inj.from;
            os << "inject " << a.anchor << ' ' << a.inj.deliver_at << ' ' << a.inj.to << ' ' << serialize(m) << '\n';
        }
    }
}

/// Applies a recorded schedule. Send ids are assigned in a deterministic
/// order, so the same configuration reproduces the same ids.
class ReplayController final : public ScheduleController {
public:
    explicit ReplayController(const ScheduleFile& f) {
        for (const auto& d : f.deliveries) {
            if (!deliveries_.emplace(d.send_id, d.time).second) {
                throw ConfigError("send id " + std::to_string(d.send_id) + " scheduled twice");
            }
        }
        for (const auto& a : f.injections) injections_[a.anchor].push_back(a.inj);
    }

    std::optional<Time> on_send(const SendInfo& info, const Simulator&, std::vector<Injection>& inject) override {
        if (auto it = injections_.find(info.id); it != injections_.end()) {
            for (const auto& x : it->second) inject.push_back(x);
            used_anchors_++;
        }
        auto it = deliveries_.find(info.id);
        if (it == deliveries_.end()) return std::nullopt;
        ++used_deliveries_;
        if (it->second < info.sent) {
            throw ConfigError("schedule delivers send " + std::to_string(info.id) + " at " +
                              std::to_string(it->second) + ", before it was sent at " + std::to_string(info.sent));
        }
        return it->second;
    }

    /// Entries never matched by the run (the schedule ran past the end of the run or does not fit it).
    [[nodiscard]] std::size_t unused() const {
        return deliveries_.size() - used_deliveries_ + injections_.size() - used_anchors_;
    }

private:
    std::map<std::uint64_t, Time> deliveries_;
    std::map<std::uint64_t, std::vector<Injection>> injections_;
    std::size_t used_deliveries_ = 0;
    std::size_t used_anchors_ = 0;
};

/// Forwards to `inner` and keeps everything it decided, for writing a ScheduleFile.
class RecordingController final : public ScheduleController {
public:
    explicit RecordingController(ScheduleController& inner) : inner_(inner) {}

    std::optional<Time> on_send(const SendInfo& info, const Simulator& sim, std::vector<Injection>& inject) override {
        const std::size_t before = inject.size();
        auto t = inner_.on_send(info, sim, inject);
        if (t) deliveries_.push_back({info.id, *t});
        for (std::size_t i = before; i < inject.size(); ++i) injections_.push_back({info.id, inject[i]});
        return t;
    }

    [[nodiscard]] ScheduleFile file(const Scenario& sc, std::string generator) const {
        ScheduleFile f;
        f.scenario = sc;
        f.generator = std::move(generator);
        f.deliveries = deliveries_;
        f.injections = injections_;
        return f;
    }

private:
    ScheduleController& inner_;
    std::vector<DeliverOverride> deliveries_;
    std::vector<AnchoredInjection> injections_;
};

}  // namespace dbft::simnet
