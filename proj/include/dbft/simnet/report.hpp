#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbft/core.hpp"

namespace dbft::simnet {

struct ProcessOutcome {
    ProcessId id = 0;
    bool byzantine = false;
    std::optional<BinValue> binary;
    std::optional<std::string> payload;
    Round decision_round = 0;
    Time decision_time = -1;
    int decision_depth = 0;
    Round last_round = 0;
    Round halted_round = 0;
    int malformed = 0;
};

struct Verdict {
    std::string name;
    bool ok = true;
    std::string detail;
};

struct RunReport {
    bool terminated = false;
    Time end_time = 0;
    std::uint64_t seed = 0;
    std::vector<ProcessOutcome> outcomes;
    std::optional<BinValue> decided_value;
    std::optional<std::string> decided_payload;
    Round rounds_to_last_decision = 0;
    int critical_path_delays = 0;
    std::uint64_t total_messages = 0;
    std::vector<Verdict> checks;
    std::vector<std::string> trace;

    [[nodiscard]] bool safety_ok() const {
        for (const auto& c : checks) {
            if (!c.ok) return false;
        }
        return true;
    }

    [[nodiscard]] const Verdict* failed_check() const {
        for (const auto& c : checks) {
            if (!c.ok) return &c;
        }
        return nullptr;
    }

    [[nodiscard]] std::string decided_string() const {
        if (decided_value) return std::to_string(to_int(*decided_value));
        if (decided_payload) return *decided_payload;
        return "";
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os << "terminated " << (terminated ? "yes" : "no") << '\n';
        os << "end_time " << end_time << '\n';
        os << "seed " << seed << '\n';
        os << "decided " << (terminated ? decided_string() : std::string("-")) << '\n';
        os << "rounds_to_last_decision " << rounds_to_last_decision << '\n';
        os << "critical_path_message_delays " << critical_path_delays << '\n';
        os << "total_messages " << total_messages << '\n';
        for (const auto& o : outcomes) {
            os << "process " << o.id << (o.byzantine ? " byzantine" : "");
            if (o.binary) os << " value " << to_int(*o.binary);
            if (o.payload) os << " payload " << *o.payload;
            if (o.binary || o.payload) {
                os << " round " << o.decision_round << " time " << o.decision_time << " depth "
                   << o.decision_depth;
            } else if (!o.byzantine) {
                os << " undecided";
            }
            os << " last_round " << o.last_round;
            if (o.halted_round) os << " halted " << o.halted_round;
            os << '\n';
        }
        for (const auto& c : checks) {
            os << "check " << c.name << ' ' << (c.ok ? "ok" : "VIOLATED");
            if (!c.detail.empty()) os << ' ' << c.detail;
            os << '\n';
        }
        return os.str();
    }
};

}  // namespace dbft::simnet
