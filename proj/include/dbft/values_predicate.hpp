#pragma once

#include <optional>
#include <span>

#include "dbft/core.hpp"

namespace dbft {

/// Which sets V in {{0},{1},{0,1}} are the union of some `quorum` of the
/// received AUX payloads (one payload per distinct sender) and fit in
/// bin_values.
struct ValuesCandidates {
    bool zero = false;
    bool one = false;
    bool both = false;

    [[nodiscard]] bool any() const { return zero || one || both; }
    [[nodiscard]] bool admits(BinSet s) const {
        if (s == BinSet(BinValue::zero)) return zero;
        if (s == BinSet(BinValue::one)) return one;
        if (s == BinSet::both()) return both;
        return false;
    }
};

inline ValuesCandidates values_candidates(std::span<const BinSet> aux_payloads, BinSet bin_values,
                                          int quorum) {
    int zeros = 0, ones = 0, boths = 0;
    for (BinSet s : aux_payloads) {
        if (s == BinSet(BinValue::zero)) ++zeros;
        else if (s == BinSet(BinValue::one)) ++ones;
        else if (s == BinSet::both()) ++boths;
    }
    const int total = zeros + ones + boths;
    ValuesCandidates c;
    if (total < quorum) return c;
    c.zero = zeros >= quorum && bin_values.contains(BinValue::zero);
    c.one = ones >= quorum && bin_values.contains(BinValue::one);
    // some quorum-sized subset mixes both values unless every payload is the same singleton
    const bool mixable = boths > 0 || (zeros > 0 && ones > 0 && quorum >= 2);
    c.both = mixable && bin_values == BinSet::both();
    return c;
}

/// Picks values_i. If the process's own aux is satisfiable it wins (New5);
/// otherwise a singleton equal to the round parity, then any singleton, then {0,1}.
inline std::optional<BinSet> select_values(const ValuesCandidates& c, std::optional<BinSet> own_aux,
                                           Round r) {
    if (!c.any()) return std::nullopt;
    if (own_aux && c.admits(*own_aux)) return own_aux;
    const BinValue b = parity(r);
    if (c.admits(BinSet(b))) return BinSet(b);
    if (c.admits(BinSet(flip(b)))) return BinSet(flip(b));
    return BinSet::both();
}

inline std::optional<BinSet> resolve_values(std::span<const BinSet> aux_payloads, BinSet bin_values,
                                            int quorum, std::optional<BinSet> own_aux, Round r) {
    return select_values(values_candidates(aux_payloads, bin_values, quorum), own_aux, r);
}

}  // namespace dbft
