#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dbft {

using ProcessId = std::int32_t;   // 1..n
using Round = std::int32_t;       // 1-based algorithm round
using MiniRound = std::int32_t;   // 0-based half-round
using Time = std::int64_t;        // simulated ticks
using InstanceTag = std::int32_t;

/// Tag used by standalone binary consensus runs.
inline constexpr InstanceTag kStandaloneInstance = 0;
/// Tag carried by the final decision of a multivalue consensus.
inline constexpr InstanceTag kMultivalueInstance = -1;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a caller violates an operation's contract (double propose,
/// wrong role, malformed input handed in by the host).
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Config {
    int n = 4;
    int t = 1;

    void validate() const {
        if (n < 1) throw ConfigError("n must be positive");
        if (t < 0) throw ConfigError("t must be non-negative");
        if (n < 3 * t + 1) {
            throw ConfigError("fault budget violates t < n/3 (n=" + std::to_string(n) +
                              ", t=" + std::to_string(t) + ")");
        }
    }

    [[nodiscard]] bool valid_id(ProcessId p) const { return p >= 1 && p <= n; }
    [[nodiscard]] int quorum() const { return n - t; }
};

enum class BinValue : std::uint8_t { zero = 0, one = 1 };

constexpr int to_int(BinValue v) { return static_cast<int>(v); }
constexpr BinValue flip(BinValue v) { return v == BinValue::zero ? BinValue::one : BinValue::zero; }
constexpr BinValue parity(Round r) { return (r % 2 == 0) ? BinValue::zero : BinValue::one; }

inline BinValue bin_from_int(int v) {
    if (v == 0) return BinValue::zero;
    if (v == 1) return BinValue::one;
    throw std::invalid_argument("binary value must be 0 or 1, got " + std::to_string(v));
}

/// Subset of {0,1}. Stored as a two-bit mask.
class BinSet {
public:
    constexpr BinSet() = default;
    constexpr explicit BinSet(BinValue v) : bits_(bit(v)) {}
    static constexpr BinSet both() { return from_bits(3); }
    static constexpr BinSet from_bits(std::uint8_t bits) {
        BinSet s;
        s.bits_ = static_cast<std::uint8_t>(bits & 3u);
        return s;
    }

    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
    [[nodiscard]] constexpr int size() const { return (bits_ & 1u) + ((bits_ >> 1) & 1u); }
    [[nodiscard]] constexpr bool contains(BinValue v) const { return (bits_ & bit(v)) != 0; }
    [[nodiscard]] constexpr bool is_singleton() const { return size() == 1; }
    [[nodiscard]] constexpr bool subset_of(BinSet o) const { return (bits_ & ~o.bits_) == 0; }
    [[nodiscard]] constexpr std::uint8_t bits() const { return bits_; }

    /// The element of a singleton.
    [[nodiscard]] BinValue single() const {
        if (!is_singleton()) throw ProtocolError("BinSet::single on non-singleton");
        return bits_ == 1 ? BinValue::zero : BinValue::one;
    }

    constexpr void insert(BinValue v) { bits_ |= bit(v); }
    constexpr BinSet operator|(BinSet o) const { return from_bits(bits_ | o.bits_); }
    constexpr bool operator==(const BinSet&) const = default;

    /// Sorted digits: "", "0", "1" or "01".
    [[nodiscard]] std::string to_string() const {
        std::string s;
        if (contains(BinValue::zero)) s += '0';
        if (contains(BinValue::one)) s += '1';
        return s;
    }

private:
    static constexpr std::uint8_t bit(BinValue v) { return v == BinValue::zero ? 1u : 2u; }
    std::uint8_t bits_ = 0;
};

/// Argument of bin_propose: a binary value or the reduction's fast-path marker (-1).
enum class ProposalInput : std::int8_t { zero = 0, one = 1, fast_path = -1 };

inline ProposalInput proposal_from_int(int v) {
    switch (v) {
    case 0: return ProposalInput::zero;
    case 1: return ProposalInput::one;
    case -1: return ProposalInput::fast_path;
    default: throw std::invalid_argument("proposal must be 0, 1 or -1");
    }
}

enum class Phase : std::uint8_t { first = 0, second = 1 };

/// Weak coordinator of round r: ((r - 1) mod n) + 1.
inline ProcessId coordinator_of(Round r, const Config& cfg) {
    if (r < 1) throw std::invalid_argument("round must be >= 1");
    return static_cast<ProcessId>(((r - 1) % cfg.n) + 1);
}

inline MiniRound mini_round_of(Round r, Phase phase) {
    if (r < 1) throw std::invalid_argument("round must be >= 1");
    return 2 * (r - 1) + static_cast<int>(phase);
}

enum class MsgKind : std::uint8_t { b_val, aux, coord_value, rb_init, rb_echo, rb_ready };

constexpr bool is_rb(MsgKind k) {
    return k == MsgKind::rb_init || k == MsgKind::rb_echo || k == MsgKind::rb_ready;
}

inline std::string_view kind_name(MsgKind k) {
    switch (k) {
    case MsgKind::b_val: return "B_VAL";
    case MsgKind::aux: return "AUX";
    case MsgKind::coord_value: return "COORD_VALUE";
    case MsgKind::rb_init: return "RB_INIT";
    case MsgKind::rb_echo: return "RB_ECHO";
    case MsgKind::rb_ready: return "RB_READY";
    }
    return "?";
}

inline MsgKind kind_from_name(std::string_view s) {
    for (auto k : {MsgKind::b_val, MsgKind::aux, MsgKind::coord_value, MsgKind::rb_init,
                   MsgKind::rb_echo, MsgKind::rb_ready}) {
        if (kind_name(k) == s) return k;
    }
    throw std::invalid_argument("unknown message kind '" + std::string(s) + "'");
}

/// The only thing that crosses the simulated wire. Which payload field is
/// meaningful depends on `kind`: `value` for B_VAL/COORD_VALUE, `set` for AUX,
/// `data` for the RB kinds. RB messages carry round 0.
struct Message {
    MsgKind kind = MsgKind::b_val;
    InstanceTag instance = kStandaloneInstance;
    Round round = 0;
    BinValue value = BinValue::zero;
    BinSet set{};
    std::string data;
    ProcessId sender = 0;

    static Message b_val(InstanceTag k, Round r, BinValue v, ProcessId from) {
        Message m;
        m.kind = MsgKind::b_val;
        m.instance = k;
        m.round = r;
        m.value = v;
        m.sender = from;
        return m;
    }
    static Message aux(InstanceTag k, Round r, BinSet s, ProcessId from) {
        Message m;
        m.kind = MsgKind::aux;
        m.instance = k;
        m.round = r;
        m.set = s;
        m.sender = from;
        return m;
    }
    static Message coord(InstanceTag k, Round r, BinValue v, ProcessId from) {
        Message m = b_val(k, r, v, from);
        m.kind = MsgKind::coord_value;
        return m;
    }
    static Message rb(MsgKind kind, InstanceTag k, std::string payload, ProcessId from) {
        Message m;
        m.kind = kind;
        m.instance = k;
        m.data = std::move(payload);
        m.sender = from;
        return m;
    }

    bool operator==(const Message& o) const {
        if (kind != o.kind || instance != o.instance || sender != o.sender) return false;
        switch (kind) {
        case MsgKind::b_val:
        case MsgKind::coord_value: return round == o.round && value == o.value;
        case MsgKind::aux: return round == o.round && set == o.set;
        default: return data == o.data;
        }
    }
};

/// Mini-round a round-carrying message belongs to. B_VAL and COORD_VALUE are
/// emitted in the first half of their round, AUX in the second.
inline MiniRound mini_round_of_message(const Message& m) {
    switch (m.kind) {
    case MsgKind::b_val:
    case MsgKind::coord_value: return mini_round_of(m.round, Phase::first);
    case MsgKind::aux: return mini_round_of(m.round, Phase::second);
    default: throw std::invalid_argument("RB messages carry no round");
    }
}

namespace detail {

inline std::string hex_encode(std::string_view bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out += digits[c >> 4];
        out += digits[c & 15];
    }
    return out;
}

inline std::string hex_decode(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw std::invalid_argument("bad hex digit");
    };
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex payload");
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        out += static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1]));
    }
    return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline long long parse_int(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty integer field");
    std::size_t used = 0;
    long long v = std::stoll(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

/// `kind|instance|round|payload|sender`. AUX payloads are sorted digits,
/// RB payloads hex-encoded bytes, RB round rendered as '-'.
inline std::string serialize(const Message& m) {
    std::ostringstream os;
    os << kind_name(m.kind) << '|' << m.instance << '|';
    if (is_rb(m.kind)) {
        os << '-';
    } else {
        os << m.round;
    }
    os << '|';
    switch (m.kind) {
    case MsgKind::b_val:
    case MsgKind::coord_value: os << to_int(m.value); break;
    case MsgKind::aux: os << m.set.to_string(); break;
    default: os << detail::hex_encode(m.data); break;
    }
    os << '|' << m.sender;
    return os.str();
}

inline Message parse_message(std::string_view line) {
    auto f = detail::split(line, '|');
    if (f.size() != 5) throw std::invalid_argument("message needs 5 fields: " + std::string(line));
    Message m;
    m.kind = kind_from_name(f[0]);
    m.instance = static_cast<InstanceTag>(detail::parse_int(f[1]));
    if (is_rb(m.kind)) {
        if (f[2] != "-") throw std::invalid_argument("RB message must have '-' round");
        m.data = detail::hex_decode(f[3]);
    } else {
        m.round = static_cast<Round>(detail::parse_int(f[2]));
        if (m.kind == MsgKind::aux) {
            std::uint8_t bits = 0;
            for (char c : f[3]) {
                if (c == '0') bits |= 1;
                else if (c == '1') bits |= 2;
                else throw std::invalid_argument("bad AUX payload");
            }
            m.set = BinSet::from_bits(bits);
        } else {
            if (f[3].size() != 1) throw std::invalid_argument("bad binary payload");
            m.value = bin_from_int(f[3][0] - '0');
        }
    }
    m.sender = static_cast<ProcessId>(detail::parse_int(f[4]));
    return m;
}

struct DecisionEvent {
    ProcessId process = 0;
    InstanceTag instance = kStandaloneInstance;
    std::variant<BinValue, std::string> value;
    Round round_decided = 0;
    Time sim_time = 0;
};

/// One structured trace line per state-machine transition.
struct TraceRecord {
    Time time = 0;
    ProcessId process = 0;
    InstanceTag instance = 0;
    Round round = 0;
    std::string phase;
    std::string event;
    int emitted = 0;

    [[nodiscard]] std::string to_string() const {
        std::ostringstream os;
        os << "T|" << time << '|' << process << '|' << instance << '|' << round << '|' << phase
           << '|' << event << '|' << emitted;
        return os.str();
    }
};

/// Everything a protocol component produces while handling one input.
/// Broadcasts go to all n processes, including the sender itself.
struct Outbox {
    std::vector<Message> broadcasts;
    std::vector<std::pair<InstanceTag, Time>> timers;
    std::vector<DecisionEvent> decisions;
    std::vector<TraceRecord> trace;
    bool tracing = false;

    void clear() {
        broadcasts.clear();
        timers.clear();
        decisions.clear();
        trace.clear();
    }
};

}  // namespace dbft
