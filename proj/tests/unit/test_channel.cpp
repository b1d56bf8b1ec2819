// Copyright 2026 The otspc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otspc/harness/harness.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <json.hpp>

using namespace otspc;
using channel::Phase;
using channel::UpdateKind;
using channel::UpdateOp;
using harness::SimConfig;
using harness::Simulation;

namespace {

SimConfig config(int level, std::uint64_t seed = 11)
{
    SimConfig c;
    c.seed = seed;
    c.channel.privacy_level = level;
    return c;
}

UpdateOp pay(Role from, Amount amount)
{
    UpdateOp op;
    op.from = from;
    op.amount = amount;
    return op;
}

std::vector<nlohmann::json> events(const Simulation& sim, const std::string& name)
{
    std::vector<nlohmann::json> out;
    for (const auto& line : sim.log()) {
        auto j = nlohmann::json::parse(line);
        if (j["event"] == name) out.push_back(j);
    }
    return out;
}

crypto::Preimage preimage(std::string_view label)
{
    return crypto::Preimage::from_span(crypto::sha256(as_bytes(label)).span());
}

}  // namespace

// ---- sequence numbers ----------------------------------------------------

TEST(Sequence, WithoutReportsEsnFollowsIsn)
{
    channel::SequenceManager seq({crypto::sha256(as_bytes("s")), 0, 16, 32});
    EXPECT_EQ(seq.esn(), 0u);
    for (std::uint32_t i = 1; i <= 20; ++i) EXPECT_EQ(seq.advance(), i);
    EXPECT_EQ(seq.isn(), 20u);
}

TEST(Sequence, GapsOnlyAroundReportedStates)
{
    channel::SequenceManager seq({crypto::sha256(as_bytes("gaps")), 4, 16, 32});
    for (std::uint32_t j = 0; j < 200; ++j) {
        const auto d = seq.gap(j);
        EXPECT_GE(d, 1u);
        EXPECT_LE(d, 16u);
        if (j % 4 != 0 && (j + 1) % 4 != 0) EXPECT_EQ(d, 1u) << j;
    }
    EXPECT_EQ(seq.esn(), seq.gap(0) - 1);
    const auto table = seq.table(50);
    for (std::uint32_t i = 1; i <= 50; ++i) {
        EXPECT_EQ(table[i], table[i - 1] + seq.gap(i));
        EXPECT_EQ(seq.esn_of(i), table[i]);
        EXPECT_EQ(seq.advance(), table[i]);
    }
}

TEST(Sequence, DeterministicPerSeed)
{
    channel::SequenceManager a({crypto::sha256(as_bytes("x")), 2, 16, 32});
    channel::SequenceManager b({crypto::sha256(as_bytes("x")), 2, 16, 32});
    channel::SequenceManager c({crypto::sha256(as_bytes("y")), 2, 16, 32});
    EXPECT_EQ(a.table(100), b.table(100));
    EXPECT_NE(a.table(100), c.table(100));
}

TEST(Sequence, GapsPassChiSquare)
{
    constexpr std::uint32_t D = 16;
    const double critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(D - 1), 0.01));
    channel::SequenceManager seq({crypto::sha256(as_bytes("chi")), 1, D, 32});
    std::array<int, D> counts{};
    for (std::uint32_t j = 0; j < 1000; ++j) ++counts[seq.gap(j) - 1];
    const double expected = 1000.0 / D;
    double chi = 0;
    for (int c : counts) chi += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi, critical);
}

TEST(Sequence, OverflowIsAnError)
{
    channel::SequenceManager seq({crypto::sha256(as_bytes("o")), 0, 16, 4});
    for (int i = 0; i < 15; ++i) seq.advance();
    EXPECT_EQ(seq.esn(), 15u);
    try {
        seq.advance();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EsnOverflow);
    }
    EXPECT_EQ(seq.isn(), 15u) << "a failed advance leaves the manager untouched";
}

// ---- update protocol -----------------------------------------------------

class ChannelLevels : public ::testing::TestWithParam<int> {};

TEST_P(ChannelLevels, OpensAndPays)
{
    Simulation sim(config(GetParam()));
    sim.open();
    for (int i = 0; i < 3; ++i) sim.pay(Role::Alice, 1500);
    sim.pay(Role::Bob, 500);
    for (Role r : {Role::Alice, Role::Bob}) {
        const auto& s = sim.peer(r).state();
        EXPECT_EQ(s.isn, 4u);
        EXPECT_EQ(s.a_bal, 46000);
        EXPECT_EQ(s.b_bal, 54000);
        EXPECT_EQ(sim.peer(r).phase(), Phase::Open);
    }
    EXPECT_EQ(sim.peer(Role::Alice).state().esn, sim.peer(Role::Bob).state().esn);
    EXPECT_TRUE(sim.violations().empty());
}

TEST_P(ChannelLevels, HonestExitPaysLatestState)
{
    Simulation sim(config(GetParam()));
    sim.open();
    sim.pay(Role::Alice, 7000);
    sim.pay(Role::Bob, 2000);
    sim.peer(Role::Bob).unilateral_exit();
    ASSERT_TRUE(sim.run_until_idle());
    EXPECT_EQ(sim.balance(Role::Alice), 45000);
    EXPECT_EQ(sim.balance(Role::Bob), 55000);
    EXPECT_EQ(sim.peer(Role::Alice).phase(), Phase::Closed);
    EXPECT_TRUE(sim.chain().audit().empty());
}

TEST_P(ChannelLevels, StorageDoesNotGrow)
{
    Simulation sim(config(GetParam()));
    sim.open();
    sim.pay(Role::Alice, 10);
    const auto after_one = sim.peer(Role::Bob).storage_bytes();
    for (int i = 0; i < 30; ++i) sim.pay(i % 2 ? Role::Alice : Role::Bob, 10);
    EXPECT_EQ(sim.peer(Role::Bob).storage_bytes(), after_one);
    EXPECT_EQ(sim.peer(Role::Alice).punish_store().serialize().size(),
              sim.peer(Role::Bob).punish_store().serialize().size());
}

INSTANTIATE_TEST_SUITE_P(Levels, ChannelLevels, ::testing::Values(1, 2, 3));

TEST(Channel, StepsGoOutInProtocolOrder)
{
    Simulation sim(config(1));
    sim.open();
    const auto mark = sim.log().size();
    sim.pay(Role::Bob, 100);
    std::vector<std::pair<std::string, int>> sends;
    for (std::size_t i = mark; i < sim.log().size(); ++i) {
        auto j = nlohmann::json::parse(sim.log()[i]);
        if (j["event"] == "send") sends.push_back({j["party"], j["step"]});
    }
    // Bob pays: he is the payer and signs first.
    const std::vector<std::pair<std::string, int>> want{
        {"bob", 1}, {"bob", 31}, {"alice", 32}, {"alice", 4}, {"bob", 5}, {"bob", 6}, {"alice", 7}};
    EXPECT_EQ(sends, want);
}

TEST(Channel, LevelThreeRunsTheSlotRound)
{
    Simulation sim(config(3));
    sim.open();
    const auto mark = sim.log().size();
    sim.pay(Role::Alice, 100);
    std::vector<std::string> kinds;
    for (std::size_t i = mark; i < sim.log().size(); ++i) {
        auto j = nlohmann::json::parse(sim.log()[i]);
        if (j["event"] == "send") kinds.push_back(j["msg"]);
    }
    ASSERT_GE(kinds.size(), 4u);
    EXPECT_EQ(kinds[1], "SlotRequest");
    EXPECT_EQ(kinds[2], "SlotOffer");
    EXPECT_EQ(kinds[3], "SlotReply");
    EXPECT_EQ(std::count(kinds.begin(), kinds.end(), "KeyReveal"), 2);
    const auto* b = sim.peer(Role::Bob).bundle(1);
    ASSERT_TRUE(b);
    ASSERT_EQ(b->exits->commit_exit.op_returns().size(), 1u);
    EXPECT_EQ(b->exits->commit_exit.op_returns()[0], b->payload);
}

TEST(Channel, OverdraftIsRefused)
{
    Simulation sim(config(1));
    sim.open();
    try {
        sim.peer(Role::Alice).propose(pay(Role::Alice, 50001));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientBalance);
    }
    EXPECT_EQ(sim.peer(Role::Alice).phase(), Phase::Open);
}

TEST(Channel, ReplayedMessageIsIgnored)
{
    Simulation sim(config(1));
    sim.open();
    std::optional<channel::Message> copy;
    sim.tamper = [&](channel::Message& m) {
        if (m.kind == channel::MsgKind::Propose && !copy) copy = m;
    };
    sim.pay(Role::Alice, 100);
    ASSERT_TRUE(copy);
    sim.peer(Role::Bob).deliver(*copy);
    sim.run_until_idle();
    EXPECT_EQ(events(sim, "replay").size(), 1u);
    EXPECT_EQ(sim.peer(Role::Bob).state().isn, 1u);
}

TEST(Channel, MismatchedOtParametersAbortTheHandshake)
{
    auto cfg = config(1);
    Simulation sim(cfg);
    sim.tamper = [](channel::Message& m) {
        if (m.kind == channel::MsgKind::Hello && m.from == Role::Alice) m.hello->ots.params.chunk_bits = 2;
    };
    EXPECT_THROW(sim.open(), Error);
    EXPECT_EQ(sim.peer(Role::Bob).phase(), Phase::Aborted);
    const auto aborts = events(sim, "abort");
    ASSERT_FALSE(aborts.empty());
    EXPECT_EQ(aborts[0]["reason"], "HandshakeMismatch");
}

TEST(Channel, ForgedSetupSignatureAbortsTheHandshake)
{
    Simulation sim(config(1));
    sim.tamper = [](channel::Message& m) {
        if (m.kind == channel::MsgKind::Sigs && m.from == Role::Bob) m.partials[0].sig.mac.data[0] ^= 1;
    };
    EXPECT_THROW(sim.open(), Error);
    EXPECT_EQ(sim.peer(Role::Alice).phase(), Phase::Aborted);
    EXPECT_FALSE(sim.chain().known(sim.peer(Role::Alice).setup_tx().txid()));
}

TEST(Channel, ForgedUpdateSignatureAbortsAndCloses)
{
    Simulation sim(config(1));
    sim.open();
    sim.pay(Role::Alice, 4000);
    sim.tamper = [](channel::Message& m) {
        if (m.kind == channel::MsgKind::Sigs && m.step == 4) m.partials[0].sig.mac.data[5] ^= 1;
    };
    sim.peer(Role::Alice).propose(pay(Role::Alice, 1000));
    sim.run_until_idle();
    const auto aborts = events(sim, "abort");
    ASSERT_FALSE(aborts.empty());
    EXPECT_EQ(aborts[0]["reason"], "BadSignature");
    // The last agreed state closes cooperatively.
    EXPECT_EQ(sim.peer(Role::Alice).outcome().closed_by, chain::TxKind::CooperativeClose);
    EXPECT_EQ(sim.balance(Role::Alice) + sim.balance(Role::Bob), 100000 + 11000);
    EXPECT_GT(sim.balance(Role::Bob), sim.balance(Role::Alice));
}

TEST(Channel, CooperativeCloseSplitsConnectors)
{
    auto cfg = config(1);
    cfg.channel.close_fee = 200;
    Simulation sim(cfg);
    sim.open();
    sim.pay(Role::Alice, 20000);
    sim.peer(Role::Alice).cooperative_close();
    ASSERT_TRUE(sim.run_until_idle());
    EXPECT_EQ(sim.peer(Role::Bob).phase(), Phase::Closed);
    EXPECT_EQ(sim.chain().fees_total(), 200);
    EXPECT_EQ(sim.balance(Role::Alice) + sim.balance(Role::Bob), 100000 + 11000 - 200);
    EXPECT_EQ(sim.balance(Role::Alice), 30000 + (11000 - 200) * 3 / 10);
}

TEST(Channel, UnresponsivePeerLeadsToUnilateralExit)
{
    Simulation sim(config(1));
    sim.open();
    sim.pay(Role::Bob, 3000);
    sim.set_offline(Role::Alice, 1000);
    sim.peer(Role::Bob).cooperative_close();
    ASSERT_TRUE(sim.run_until_idle());
    EXPECT_FALSE(events(sim, "close-timeout").empty());
    EXPECT_EQ(sim.peer(Role::Bob).outcome().closed_by, chain::TxKind::FinalizeExit);
    EXPECT_EQ(sim.balance(Role::Bob), 47000);
    EXPECT_EQ(sim.balance(Role::Alice), 53000);
}

TEST(Channel, SequenceOverflowClosesTheChannel)
{
    auto cfg = config(1);
    cfg.channel.ot.value_bits = 4;
    cfg.channel.ot.chunk_bits = 2;
    Simulation sim(cfg);
    sim.open();
    for (int i = 0; i < 15; ++i) sim.pay(Role::Alice, 10);
    EXPECT_EQ(sim.peer(Role::Alice).state().esn, 15u);
    try {
        sim.peer(Role::Alice).propose(pay(Role::Alice, 10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EsnOverflow);
    }
    ASSERT_TRUE(sim.run_until_idle());
    EXPECT_EQ(sim.peer(Role::Alice).outcome().closed_by, chain::TxKind::CooperativeClose);
}

TEST(Channel, HtlcSettlesOffChain)
{
    Simulation sim(config(1));
    sim.open();
    UpdateOp add;
    add.kind = UpdateKind::AddHtlc;
    add.htlc = {7, Role::Alice, 4000, crypto::commit(preimage("invoice")), 500};
    sim.peer(Role::Alice).propose(add);
    sim.run_until_idle();
    EXPECT_EQ(sim.peer(Role::Bob).state().htlcs.size(), 1u);
    EXPECT_EQ(sim.peer(Role::Bob).state().a_bal, 46000);

    UpdateOp settle;
    settle.kind = UpdateKind::SettleHtlc;
    settle.htlc_id = 7;
    settle.preimage = preimage("invoice");
    sim.peer(Role::Bob).propose(settle);
    sim.run_until_idle();
    const auto& s = sim.peer(Role::Alice).state();
    EXPECT_TRUE(s.htlcs.empty());
    EXPECT_EQ(s.b_bal, 54000);
}

TEST(Channel, HtlcIsClaimedOnChainAfterExit)
{
    Simulation sim(config(1));
    sim.open();
    UpdateOp add;
    add.kind = UpdateKind::AddHtlc;
    add.htlc = {1, Role::Alice, 4000, crypto::commit(preimage("claim")), 500};
    sim.peer(Role::Alice).propose(add);
    sim.run_until_idle();
    sim.peer(Role::Bob).learn_preimage(preimage("claim"));
    sim.peer(Role::Alice).unilateral_exit();
    ASSERT_TRUE(sim.run_until_idle());
    EXPECT_EQ(sim.balance(Role::Alice), 46000);
    EXPECT_EQ(sim.balance(Role::Bob), 54000);
}
