#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "dbft/core.hpp"

namespace dbft::simnet {

using Rng = std::mt19937_64;

/// Uniform draw in [lo, hi]. Modulo reduction keeps the stream identical
/// across standard libraries.
inline std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ConfigError("empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(rng() % span);
}

struct Synchronous {
    Time d = 1;
};

/// Delays before `gst` are drawn from [1, pre_gst_max] but never land after
/// gst + d; from gst on every message takes exactly d.
struct EventuallySynchronous {
    Time gst = 100;
    Time d = 1;
    Time pre_gst_max = 20;
};

struct BoundedAsync {
    Time min = 1;
    Time max = 10;
};

class DelayModel {
public:
    using Mode = std::variant<Synchronous, EventuallySynchronous, BoundedAsync>;

    DelayModel() = default;
    DelayModel(Mode m) : mode_(m) { validate(); }  // NOLINT(google-explicit-constructor)
    DelayModel(Synchronous m) : DelayModel(Mode(m)) {}  // NOLINT(google-explicit-constructor)
    DelayModel(EventuallySynchronous m) : DelayModel(Mode(m)) {}  // NOLINT(google-explicit-constructor)
    DelayModel(BoundedAsync m) : DelayModel(Mode(m)) {}  // NOLINT(google-explicit-constructor)

    void validate() const {
        if (auto* s = std::get_if<Synchronous>(&mode_)) {
            if (s->d < 1) throw ConfigError("synchronous delay must be >= 1");
        } else if (auto* e = std::get_if<EventuallySynchronous>(&mode_)) {
            if (e->d < 1 || e->pre_gst_max < 1 || e->gst < 0) {
                throw ConfigError("eventually-synchronous needs d >= 1, pre_gst_max >= 1, gst >= 0");
            }
        } else {
            const auto& b = std::get<BoundedAsync>(mode_);
            if (b.min < 1 || b.max < b.min) throw ConfigError("bounded-async needs 1 <= min <= max");
        }
    }

    /// Delivery time of a message sent at `sent`.
    Time arrival(Time sent, Rng& rng) const {
        return std::visit(
            [&](const auto& m) -> Time {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, Synchronous>) {
                    return sent + m.d;
                } else if constexpr (std::is_same_v<M, EventuallySynchronous>) {
                    if (sent >= m.gst) return sent + m.d;
                    const Time a = sent + uniform(rng, 1, m.pre_gst_max);
                    return std::min(a, std::max(m.gst + m.d, sent + 1));
                } else {
                    return sent + uniform(rng, m.min, m.max);
                }
            },
            mode_);
    }

    [[nodiscard]] const Mode& mode() const { return mode_; }
    [[nodiscard]] bool eventually_synchronous() const {
        return std::holds_alternative<EventuallySynchronous>(mode_);
    }
    [[nodiscard]] bool synchronous() const { return std::holds_alternative<Synchronous>(mode_); }

    /// Time from which delays are bounded by `bound()`; 0 for synchronous, none for async.
    [[nodiscard]] std::optional<Time> stabilization() const {
        if (synchronous()) return 0;
        if (auto* e = std::get_if<EventuallySynchronous>(&mode_)) return e->gst;
        return std::nullopt;
    }
    [[nodiscard]] Time bound() const {
        if (auto* s = std::get_if<Synchronous>(&mode_)) return s->d;
        if (auto* e = std::get_if<EventuallySynchronous>(&mode_)) return e->d;
        return std::get<BoundedAsync>(mode_).max;
    }

    [[nodiscard]] std::string describe() const {
        if (auto* s = std::get_if<Synchronous>(&mode_)) return "synchronous " + std::to_string(s->d);
        if (auto* e = std::get_if<EventuallySynchronous>(&mode_)) {
            return "eventually-synchronous " + std::to_string(e->gst) + " " + std::to_string(e->d) + " " +
                   std::to_string(e->pre_gst_max);
        }
        const auto& b = std::get<BoundedAsync>(mode_);
        return "bounded-async " + std::to_string(b.min) + " " + std::to_string(b.max);
    }

private:
    Mode mode_ = Synchronous{};
};

}  // namespace dbft::simnet
