#include <gtest/gtest.h>

#include "dbft/psync.hpp"
#include "dbft/simnet/simulator.hpp"

using namespace dbft;

namespace {

int count_kind(const Outbox& o, MsgKind k) {
    int c = 0;
    for (const auto& m : o.broadcasts) c += m.kind == k;
    return c;
}

simnet::Scenario binary(std::vector<int> proposals, PsyncOptions po = {}) {
    simnet::Scenario sc;
    sc.cfg = {static_cast<int>(proposals.size()), (static_cast<int>(proposals.size()) - 1) / 3};
    sc.proposals = std::move(proposals);
    sc.psync = po;
    sc.delay = simnet::Synchronous{1};
    return sc;
}

}  // namespace

TEST(Psync, ProposeBroadcastsEstimateWithoutTimer) {
    Psync p(Config{4, 1}, 2, 0);
    Outbox out;
    p.propose(ProposalInput::one, 0, out);
    ASSERT_EQ(out.broadcasts.size(), 1u);
    EXPECT_EQ(out.broadcasts[0], Message::b_val(0, 1, BinValue::one, 2));
    EXPECT_TRUE(out.timers.empty());
    EXPECT_EQ(p.phase(), PsyncPhase::await_bin_values);
    EXPECT_EQ(p.round(), 1);
    EXPECT_THROW(p.propose(ProposalInput::zero, 0, out), ProtocolError);
}

TEST(Psync, TimerArmedWhenBinValuesBecomesNonEmpty) {
    Psync p(Config{4, 1}, 1, 0);
    Outbox out;
    p.propose(ProposalInput::one, 0, out);
    out.clear();
    p.on_message(Message::b_val(0, 1, BinValue::one, 2), 5, out);
    p.on_message(Message::b_val(0, 1, BinValue::one, 3), 5, out);
    EXPECT_TRUE(out.timers.empty());
    p.on_message(Message::b_val(0, 1, BinValue::one, 1), 6, out);
    EXPECT_EQ(p.bin_values(1), BinSet(BinValue::one));
    ASSERT_EQ(out.timers.size(), 1u);
    EXPECT_EQ(out.timers[0].second, 7);
    EXPECT_EQ(p.timeout(), 1);
    // p1 coordinates round 1
    EXPECT_EQ(count_kind(out, MsgKind::coord_value), 1);
    EXPECT_EQ(p.phase(), PsyncPhase::await_first_timer);
    out.clear();
    p.on_timer(7, out);
    ASSERT_EQ(count_kind(out, MsgKind::aux), 1);
    EXPECT_EQ(*p.aux(), BinSet(BinValue::one));
}

TEST(Psync, AuxFollowsCoordinatorValueInBinValues) {
    Psync p(Config{4, 1}, 3, 0);
    Outbox out;
    p.propose(ProposalInput::zero, 0, out);
    for (ProcessId s : {1, 2, 4}) p.on_message(Message::b_val(0, 1, BinValue::one, s), 1, out);
    for (ProcessId s : {1, 2, 3}) p.on_message(Message::b_val(0, 1, BinValue::zero, s), 1, out);
    EXPECT_EQ(p.bin_values(1), BinSet::both());
    p.on_message(Message::coord(0, 1, BinValue::zero, 1), 1, out);
    p.on_timer(2, out);
    EXPECT_EQ(*p.aux(), BinSet(BinValue::zero));
}

TEST(Psync, CoordinatorValueOutsideBinValuesIsIgnored) {
    Psync p(Config{4, 1}, 3, 0);
    Outbox out;
    p.propose(ProposalInput::one, 0, out);
    for (ProcessId s : {1, 2, 3}) p.on_message(Message::b_val(0, 1, BinValue::one, s), 1, out);
    p.on_message(Message::coord(0, 1, BinValue::zero, 1), 1, out);
    p.on_timer(2, out);
    EXPECT_EQ(*p.aux(), BinSet(BinValue::one));
}

TEST(Psync, MalformedInputsAreCountedAndDropped) {
    Psync p(Config{4, 1}, 2, 0);
    Outbox out;
    p.propose(ProposalInput::one, 0, out);
    p.on_message(Message::b_val(0, 1, BinValue::one, 7), 1, out);
    p.on_message(Message::b_val(0, 0, BinValue::one, 1), 1, out);
    p.on_message(Message::aux(0, 1, BinSet{}, 1), 1, out);
    p.on_message(Message::coord(0, 1, BinValue::one, 3), 1, out);
    p.on_message(Message::rb(MsgKind::rb_echo, 0, "x", 1), 1, out);
    EXPECT_EQ(p.malformed_count(), 5);
    EXPECT_TRUE(p.bin_values(1).empty());
}

TEST(Psync, FastPathOnlyWithOpt1InFullMode) {
    Outbox out;
    Psync plain(Config{4, 1}, 1, 1);
    EXPECT_THROW(plain.propose(ProposalInput::fast_path, 0, out), ProtocolError);
    PsyncOptions safe;
    safe.mode = PsyncMode::safe_only;
    safe.opt1 = true;
    Psync s(Config{4, 1}, 1, 1, safe);
    EXPECT_THROW(s.propose(ProposalInput::fast_path, 0, out), ProtocolError);
    PsyncOptions o;
    o.opt1 = true;
    Psync f(Config{4, 1}, 1, 1, o);
    f.propose(ProposalInput::fast_path, 0, out);
    EXPECT_TRUE(out.broadcasts.empty());
    EXPECT_EQ(f.est(), BinValue::one);
}

TEST(Psync, SafeOnlyHasNoTimersAndNaiveTimerArmsAtEntry) {
    PsyncOptions safe;
    safe.mode = PsyncMode::safe_only;
    Psync s(Config{4, 1}, 2, 0, safe);
    Outbox out;
    s.propose(ProposalInput::one, 0, out);
    for (ProcessId x : {1, 2, 3}) s.on_message(Message::b_val(0, 1, BinValue::one, x), 1, out);
    EXPECT_TRUE(out.timers.empty());
    EXPECT_EQ(count_kind(out, MsgKind::aux), 1);

    PsyncOptions naive = safe;
    naive.naive_timer = true;
    naive.initial_timeout = 2;
    Psync n(Config{4, 1}, 2, 0, naive);
    Outbox o2;
    n.propose(ProposalInput::one, 10, o2);
    ASSERT_EQ(o2.timers.size(), 1u);
    EXPECT_EQ(o2.timers[0].second, 13);
}

TEST(Psync, CatchUpTrackerFiresAtTPlusOneDistinctSenders) {
    CatchUpTracker tr(Config{7, 2});
    EXPECT_FALSE(tr.record(1, 5, 2));
    EXPECT_FALSE(tr.record(1, 5, 2));
    EXPECT_FALSE(tr.record(2, 5, 2));
    EXPECT_FALSE(tr.record(4, 2, 2));
    auto until = tr.record(3, 5, 2);
    ASSERT_TRUE(until);
    EXPECT_EQ(*until, 5);
    EXPECT_TRUE(tr.skips(4));
    EXPECT_FALSE(tr.skips(5));
    EXPECT_FALSE(tr.record(5, 4, 2));
}

TEST(Psync, UnanimousOneDecidesInRoundOne) {
    for (int n : {4, 7, 10}) {
        simnet::Simulator sim(binary(std::vector<int>(static_cast<std::size_t>(n), 1)));
        auto rep = sim.run();
        ASSERT_TRUE(rep.terminated);
        EXPECT_EQ(rep.decided_value, BinValue::one);
        EXPECT_EQ(rep.rounds_to_last_decision, 1);
    }
}

TEST(Psync, UnanimousZeroDecidesInRoundTwo) {
    for (int n : {4, 7, 10}) {
        simnet::Simulator sim(binary(std::vector<int>(static_cast<std::size_t>(n), 0)));
        auto rep = sim.run();
        ASSERT_TRUE(rep.terminated);
        EXPECT_EQ(rep.decided_value, BinValue::zero);
        EXPECT_EQ(rep.rounds_to_last_decision, 2);
    }
}

TEST(Psync, DecidedRoundWaitsForBothValues) {
    simnet::Simulator sim(binary({1, 1, 1, 1}));
    while (!sim.queue_empty()) sim.step();
    for (ProcessId p = 1; p <= 4; ++p) {
        EXPECT_EQ(sim.psync(p)->phase(), PsyncPhase::await_both_values);
        EXPECT_EQ(sim.psync(p)->round(), 1);
    }
}

TEST(Psync, HaltsTwoRoundsAfterDeciding) {
    int halted = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        auto sc = binary({0, 1, 1, 0, 1, 0, 1});
        sc.delay = simnet::BoundedAsync{1, 6};
        sc.seed = seed;
        simnet::Simulator sim(sc);
        while (!sim.queue_empty() && sim.now() <= 5000) sim.step();
        for (ProcessId p = 1; p <= 7; ++p) {
            const Psync* ps = sim.psync(p);
            ASSERT_TRUE(ps->decision());
            if (!ps->halted()) continue;
            ++halted;
            EXPECT_EQ(ps->halted_round(), ps->decision_round() + 2);
        }
    }
    EXPECT_GT(halted, 0);
}

TEST(Psync, WithoutOpt2ProcessesKeepGoing) {
    PsyncOptions po;
    po.opt2 = false;
    auto sc = binary({1, 1, 1, 1}, po);
    simnet::Simulator sim(sc);
    for (int i = 0; i < 2000 && !sim.queue_empty(); ++i) sim.step();
    EXPECT_FALSE(sim.psync(1)->halted());
    EXPECT_GT(sim.psync(1)->round(), 3);
}

TEST(Psync, DeterministicForIdenticalInputs) {
    auto sc = binary({0, 1, 1, 0, 1, 0, 0});
    sc.delay = simnet::BoundedAsync{1, 9};
    sc.adversary.behavior = simnet::Behavior::byz3;
    sc.seed = 99;
    sc.tracing = true;
    auto a = simnet::Simulator(sc).run();
    auto b = simnet::Simulator(sc).run();
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(a.to_text(), b.to_text());
}
