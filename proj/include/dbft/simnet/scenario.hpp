#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dbft/core.hpp"
#include "dbft/dbft.hpp"
#include "dbft/psync.hpp"
#include "dbft/simnet/delay.hpp"

namespace dbft::simnet {

enum class Behavior : std::uint8_t { none, byz1, byz2, byz3, byz4, replay };

inline std::string_view behavior_name(Behavior b) {
    switch (b) {
    case Behavior::none: return "none";
    case Behavior::byz1: return "byz1";
    case Behavior::byz2: return "byz2";
    case Behavior::byz3: return "byz3";
    case Behavior::byz4: return "byz4";
    case Behavior::replay: return "replay";
    }
    return "?";
}

inline Behavior behavior_from_name(std::string_view s) {
    for (auto b : {Behavior::none, Behavior::byz1, Behavior::byz2, Behavior::byz3, Behavior::byz4,
                   Behavior::replay}) {
        if (behavior_name(b) == s) return b;
    }
    throw ConfigError("unknown adversary '" + std::string(s) + "'");
}

struct AdversarySpec {
    Behavior behavior = Behavior::none;
    /// Empty means the default set {1..t}.
    std::vector<ProcessId> byzantine;
    /// Byz3: COORD_VALUE bits consumed in send order before falling back to the seeded RNG.
    std::vector<int> coin_script;

    [[nodiscard]] std::set<ProcessId> resolve(const Config& cfg) const {
        std::set<ProcessId> s;
        if (behavior == Behavior::none) return s;
        if (byzantine.empty()) {
            for (ProcessId p = 1; p <= cfg.t; ++p) s.insert(p);
        } else {
            for (ProcessId p : byzantine) {
                if (!cfg.valid_id(p)) throw ConfigError("byzantine id out of range");
                s.insert(p);
            }
        }
        if (static_cast<int>(s.size()) > cfg.t) throw ConfigError("more byzantine processes than t");
        return s;
    }
};

enum class RunMode : std::uint8_t { binary, multivalue, rb_only };

struct Scenario {
    Config cfg{};
    RunMode mode = RunMode::binary;
    DelayModel delay{};
    AdversarySpec adversary{};
    /// Binary mode: one 0/1 per process.
    std::vector<int> proposals;
    /// Multivalue mode: one payload per process. RB mode: payload of rb_sender.
    std::vector<std::string> payloads;
    ProcessId rb_sender = 1;
    std::uint64_t seed = 1;
    Time max_time = 100000;
    PsyncOptions psync{};
    bool opt1 = true;
    bool eager = true;
    ValidityPredicate validity;
    /// Byzantine proposers skip their own validity check.
    bool byzantine_skip_validation = true;
    /// Per-process start time; empty or shorter means 0.
    std::vector<Time> start_times;
    /// Added to the send time of every emitted message.
    Time processing_delay = 0;
    bool tracing = false;

    void validate() const {
        cfg.validate();
        delay.validate();
        (void)adversary.resolve(cfg);
        if (max_time < 0) throw ConfigError("max_time must be non-negative");
        if (processing_delay < 0) throw ConfigError("processing delay must be non-negative");
        switch (mode) {
        case RunMode::binary:
            if (static_cast<int>(proposals.size()) != cfg.n) throw ConfigError("need one proposal per process");
            for (int v : proposals) {
                if (v != 0 && v != 1) throw ConfigError("binary proposals must be 0 or 1");
            }
            break;
        case RunMode::multivalue:
            if (static_cast<int>(payloads.size()) != cfg.n) throw ConfigError("need one payload per process");
            break;
        case RunMode::rb_only:
            if (!cfg.valid_id(rb_sender)) throw ConfigError("rb sender out of range");
            if (payloads.empty()) throw ConfigError("rb mode needs a payload");
            break;
        }
        for (Time s : start_times) {
            if (s < 0) throw ConfigError("start times must be non-negative");
        }
    }

    [[nodiscard]] Time start_of(ProcessId p) const {
        const auto i = static_cast<std::size_t>(p - 1);
        return i < start_times.size() ? start_times[i] : 0;
    }
};

/// Proposal vector with `percent_zero` percent zeros placed by a seeded shuffle.
inline std::vector<int> proposals_with_zero_share(int n, int percent_zero, std::uint64_t seed) {
    if (percent_zero < 0 || percent_zero > 100) throw ConfigError("percent_zero must be in [0,100]");
    const int zeros = (n * percent_zero + 50) / 100;
    std::vector<int> v(static_cast<std::size_t>(n), 1);
    std::fill_n(v.begin(), zeros, 0);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform(rng, 0, i));
        std::swap(v[static_cast<std::size_t>(i)], v[j]);
    }
    return v;
}

}  // namespace dbft::simnet
