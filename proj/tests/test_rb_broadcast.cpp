#include <gtest/gtest.h>

#include <random>

#include "dbft/rb_broadcast.hpp"

using namespace dbft;

namespace {

// Smallest k such that any two sets of k processes out of n intersect in at
// least t+1, found by counting instead of by formula.
int min_intersecting_quorum(int n, int t) {
    for (int k = 1; k <= n; ++k) {
        if (2 * k - n >= t + 1) return k;
    }
    return n + 1;
}

}  // namespace

TEST(ReliableBroadcast, ThresholdsMatchBruteForce) {
    for (int n = 4; n <= 10; ++n) {
        for (int t = 0; 3 * t < n; ++t) {
            ReliableBroadcast rb(Config{n, t}, 1, 1);
            EXPECT_EQ(rb.echo_threshold(), min_intersecting_quorum(n, t)) << n << ' ' << t;
            EXPECT_EQ(rb.ready_amplify_threshold(), t + 1);
            EXPECT_EQ(rb.deliver_threshold(), 2 * t + 1);
        }
    }
}

TEST(ReliableBroadcast, EchoQuorumDeliversWithoutInit) {
    ReliableBroadcast rb(Config{4, 1}, 2, 1);
    EXPECT_TRUE(rb.on_message(MsgKind::rb_echo, 1, "x").broadcast.empty());
    EXPECT_TRUE(rb.on_message(MsgKind::rb_echo, 3, "x").broadcast.empty());
    auto o = rb.on_message(MsgKind::rb_echo, 4, "x");
    ASSERT_EQ(o.broadcast.size(), 1u);
    EXPECT_EQ(o.broadcast[0].first, MsgKind::rb_ready);
    rb.on_message(MsgKind::rb_ready, 1, "x");
    rb.on_message(MsgKind::rb_ready, 3, "x");
    o = rb.on_message(MsgKind::rb_ready, 4, "x");
    ASSERT_TRUE(o.delivered);
    EXPECT_EQ(*o.delivered, "x");
}

TEST(ReliableBroadcast, ReadyAmplification) {
    ReliableBroadcast rb(Config{7, 2}, 5, 1);
    rb.on_message(MsgKind::rb_ready, 2, "y");
    rb.on_message(MsgKind::rb_ready, 3, "y");
    EXPECT_FALSE(rb.readied_payload());
    auto o = rb.on_message(MsgKind::rb_ready, 4, "y");
    ASSERT_EQ(o.broadcast.size(), 1u);
    EXPECT_EQ(rb.readied_payload(), "y");
}

TEST(ReliableBroadcast, InitOnlyFromSenderOfRecord) {
    ReliableBroadcast rb(Config{4, 1}, 2, 1);
    EXPECT_TRUE(rb.on_message(MsgKind::rb_init, 3, "z").broadcast.empty());
    EXPECT_EQ(rb.on_message(MsgKind::rb_init, 1, "z").broadcast.size(), 1u);
    EXPECT_TRUE(rb.on_message(MsgKind::rb_init, 1, "other").broadcast.empty());
    EXPECT_EQ(rb.echoed_payload(), "z");
}

TEST(ReliableBroadcast, BroadcastGuards) {
    ReliableBroadcast rb(Config{4, 1}, 2, 1);
    EXPECT_THROW(rb.broadcast("a"), ProtocolError);
    ReliableBroadcast own(Config{4, 1}, 1, 1);
    EXPECT_EQ(own.broadcast("a").broadcast.size(), 1u);
    EXPECT_THROW(own.broadcast("a"), ProtocolError);
}

// Equivocating Byzantine sender plus Byzantine helpers under random schedules:
// no two non-faulty processes deliver different payloads, and if one delivers
// every non-faulty process does.
TEST(ReliableBroadcast, EquivocatingSenderNetwork) {
    struct Wire {
        MsgKind kind;
        ProcessId from, to;
        std::string payload;
    };
    for (int n : {4, 7, 10}) {
        const int t = (n - 1) / 3;
        for (std::uint64_t seed = 1; seed <= 200; ++seed) {
            std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(n));
            std::vector<ReliableBroadcast> procs;
            procs.emplace_back();
            for (ProcessId p = 1; p <= n; ++p) procs.emplace_back(Config{n, t}, p, 1);
            auto byz = [&](ProcessId p) { return p <= t; };
            std::vector<Wire> pending;
            for (ProcessId to = 1; to <= n; ++to) {
                const std::string v = (rng() % 2) ? "A" : "B";
                pending.push_back({MsgKind::rb_init, 1, to, v});
                for (ProcessId b = 2; b <= t; ++b) {
                    pending.push_back({MsgKind::rb_echo, b, to, v});
                    pending.push_back({MsgKind::rb_ready, b, to, v});
                }
                pending.push_back({MsgKind::rb_echo, 1, to, v});
                pending.push_back({MsgKind::rb_ready, 1, to, (rng() % 2) ? "A" : "B"});
            }
            while (!pending.empty()) {
                const auto i = static_cast<std::size_t>(rng() % pending.size());
                Wire w = pending[i];
                pending[i] = pending.back();
                pending.pop_back();
                if (byz(w.to)) continue;
                auto o = procs[static_cast<std::size_t>(w.to)].on_message(w.kind, w.from, w.payload);
                for (const auto& [k, p] : o.broadcast) {
                    for (ProcessId to = 1; to <= n; ++to) pending.push_back({k, w.to, to, p});
                }
            }
            std::optional<std::string> first;
            int delivered = 0;
            for (ProcessId p = t + 1; p <= n; ++p) {
                const auto& d = procs[static_cast<std::size_t>(p)].delivered();
                if (!d) continue;
                ++delivered;
                if (!first) first = d;
                ASSERT_EQ(*d, *first) << "n=" << n << " seed=" << seed;
            }
            ASSERT_TRUE(delivered == 0 || delivered == n - t) << "n=" << n << " seed=" << seed;
        }
    }
}
