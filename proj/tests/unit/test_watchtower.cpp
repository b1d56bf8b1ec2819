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

#include <gtest/gtest.h>

#include <json.hpp>

#include <set>

using namespace otspc;
using harness::SimConfig;
using harness::Simulation;
using watchtower::WireKind;
using watchtower::WireRecord;

namespace {

SimConfig with_tower(int level, Role client, std::uint64_t seed = 5)
{
    SimConfig c;
    c.seed = seed;
    c.channel.privacy_level = level;
    c.towers[client == Role::Alice ? 0 : 1].enabled = true;
    return c;
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

std::vector<Bytes> updates(const Simulation& sim, Role client)
{
    std::vector<Bytes> out;
    for (const auto& e : sim.transcript())
        if (e.client == client && WireRecord::decode(e.record).kind == WireKind::Update) out.push_back(e.record);
    return out;
}

// Alice pays nine times, then Bob goes dark while she exits with state 2.
void cheat_while_offline(Simulation& sim, std::uint32_t state = 2)
{
    sim.open();
    for (int i = 0; i < 9; ++i) sim.pay(Role::Alice, 1000);
    sim.set_offline(Role::Bob, 200);
    sim.peer(Role::Alice).cheat_exit(state, true);
    sim.run_until_idle();
    sim.run(30);
}

}  // namespace

// ---- wire format ---------------------------------------------------------

TEST(Wire, RecordRoundTrip)
{
    WireRecord r;
    r.channel = crypto::sha256(as_bytes("ch"));
    r.level = 3;
    r.kind = WireKind::Update;
    r.payload = watchtower::L3Update{9, crypto::sha256(as_bytes("k"))}.encode();
    const auto bytes = r.encode();
    const auto back = WireRecord::decode(bytes);
    EXPECT_EQ(back.channel, r.channel);
    EXPECT_EQ(back.level, 3);
    EXPECT_EQ(back.kind, WireKind::Update);
    const auto u = watchtower::L3Update::decode(back.payload);
    EXPECT_EQ(u.index, 9u);
    EXPECT_EQ(u.key, crypto::sha256(as_bytes("k")));
}

TEST(Wire, TruncatedRecordIsMalformed)
{
    WireRecord r;
    r.payload = Bytes(10, 1);
    auto bytes = r.encode();
    bytes.pop_back();
    try {
        WireRecord::decode(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Malformed);
    }
}

TEST(Wire, UpdateBeforeRegisterIsRejected)
{
    crypto::SignerRegistry registry;
    chain::Chain chain{&registry};
    watchtower::Tower tower({1, Role::Bob}, chain);
    WireRecord r;
    r.channel = crypto::sha256(as_bytes("nobody"));
    r.kind = WireKind::Update;
    try {
        tower.ingest(r.encode(), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownChannel);
    }
    EXPECT_EQ(tower.channels(), 0u);
}

// ---- defending an offline client -----------------------------------------

class TowerLevels : public ::testing::TestWithParam<int> {};

TEST_P(TowerLevels, PunishesWhileClientIsOffline)
{
    auto cfg = with_tower(GetParam(), Role::Bob);
    cfg.keep_history = {true, false};
    Simulation sim(cfg);
    cheat_while_offline(sim);
    EXPECT_EQ(sim.peer(Role::Alice).outcome().punished, Role::Alice);
    EXPECT_EQ(sim.balance(Role::Alice), 0);
    EXPECT_EQ(sim.balance(Role::Bob), 100000);
    EXPECT_EQ(sim.tower_balance(Role::Bob), cfg.channel.tower_reward);
    EXPECT_TRUE(sim.tower(Role::Bob)->last_rebuilt().has_value());
    EXPECT_TRUE(sim.chain().audit().empty());
}

TEST_P(TowerLevels, RecordsKeepOneSize)
{
    auto cfg = with_tower(GetParam(), Role::Bob);
    Simulation sim(cfg);
    sim.open();
    sim.pay(Role::Alice, 10);
    sim.run(5);
    const auto* tower = sim.tower(Role::Bob);
    ASSERT_EQ(tower->channels(), 1u);
    std::set<std::size_t> held;
    for (int i = 0; i < 25; ++i) {
        sim.pay(i % 3 ? Role::Alice : Role::Bob, 10 + i);
        sim.run(2);
        for (const auto& e : sim.transcript()) {
            const auto r = WireRecord::decode(e.record);
            if (r.kind == WireKind::Update) held.insert(tower->record_size(r.channel));
        }
    }
    EXPECT_EQ(held.size(), 1u);
    std::set<std::size_t> sizes;
    for (const auto& u : updates(sim, Role::Bob)) sizes.insert(u.size());
    EXPECT_EQ(sizes.size(), 1u);
}

INSTANTIATE_TEST_SUITE_P(Levels, TowerLevels, ::testing::Values(1, 2, 3));

TEST(Tower, LevelTwoPacketsLookFreshEverySend)
{
    auto cfg = with_tower(2, Role::Bob);
    cfg.channel.tower_interval = 2;
    Simulation sim(cfg);
    sim.open();
    sim.pay(Role::Alice, 100);
    sim.run(20);  // nothing changes, packets keep flowing
    const auto sent = updates(sim, Role::Bob);
    ASSERT_GE(sent.size(), 8u);
    std::set<Bytes> distinct(sent.begin(), sent.end());
    EXPECT_EQ(distinct.size(), sent.size());
    std::set<crypto::Hash256> handles;
    for (const auto& s : sent) handles.insert(WireRecord::decode(s).channel);
    EXPECT_EQ(handles.size(), 1u);
}

TEST(Tower, LevelTwoIgnoresHonestExit)
{
    auto cfg = with_tower(2, Role::Bob);
    Simulation sim(cfg);
    sim.open();
    for (int i = 0; i < 4; ++i) sim.pay(Role::Alice, 1000);
    sim.set_offline(Role::Bob, 200);
    sim.peer(Role::Alice).unilateral_exit();
    sim.run_until_idle();
    sim.run(30);
    EXPECT_TRUE(sim.tower(Role::Bob)->published().empty());
    EXPECT_EQ(sim.balance(Role::Alice), 46000);
}

TEST(Tower, LevelThreeWalksDownTheKeyChain)
{
    auto cfg = with_tower(3, Role::Bob);
    cfg.keep_history = {true, false};
    Simulation sim(cfg);
    cheat_while_offline(sim, 2);
    const auto steps = sim.tower(Role::Bob)->last_derivations();
    ASSERT_TRUE(steps.has_value());
    // Latest revealed key is for esn 9; the stale state is esn 2.
    EXPECT_EQ(*steps, 9u - (2u + 1u));
    EXPECT_EQ(events(sim, "decrypted").size(), 1u);
}

TEST(Tower, LevelThreeCorruptKeyMeansDecryptFailure)
{
    auto cfg = with_tower(3, Role::Bob);
    cfg.keep_history = {true, false};
    Simulation sim(cfg);
    sim.tamper_tower = [](Role, Bytes& rec) {
        if (WireRecord::decode(rec).kind == WireKind::Update) rec.back() ^= 0x40;
    };
    cheat_while_offline(sim, 2);
    EXPECT_EQ(events(sim, "decrypt-failure").size(), 1u);
    EXPECT_TRUE(sim.tower(Role::Bob)->published().empty());
    EXPECT_NE(sim.peer(Role::Alice).outcome().punished, Role::Alice);
}

TEST(Tower, LevelThreeStaleKeyCannotReachNewerState)
{
    auto cfg = with_tower(3, Role::Bob);
    cfg.keep_history = {true, false};
    Simulation sim(cfg);
    int seen = 0;
    // Only the first three key reveals reach the tower intact.
    sim.tamper_tower = [&](Role, Bytes& rec) {
        if (WireRecord::decode(rec).kind == WireKind::Update && ++seen > 3) rec[4] ^= 1;
    };
    cheat_while_offline(sim, 5);
    EXPECT_FALSE(events(sim, "tower-reject").empty());
    const auto stale = events(sim, "stale-record");
    ASSERT_EQ(stale.size(), 1u);
    EXPECT_EQ(stale[0]["detail"], "esn 5");
    EXPECT_TRUE(sim.tower(Role::Bob)->published().empty());
}

// ---- a tower working for the other side ----------------------------------

class Betrayal : public ::testing::TestWithParam<bool> {};

TEST_P(Betrayal, ColludingTowerAndStalePunishPair)
{
    const bool separate = GetParam();
    auto cfg = with_tower(1, Role::Bob);
    cfg.channel.separate_wt_outputs = separate;
    cfg.keep_history = {true, false};
    cfg.towers[1].keep_history = true;
    cfg.towers[1].collude = true;
    Simulation sim(cfg);
    sim.open();
    for (int i = 0; i < 6; ++i) sim.pay(Role::Alice, 1000);
    // Alice holds the assert back until her accomplice has burned the output.
    sim.peer(Role::Alice).cheat_exit(3, true, 2);
    sim.run_until_idle();
    sim.run(30);
    ASSERT_FALSE(sim.tower(Role::Bob)->published().empty());
    if (separate) {
        EXPECT_EQ(sim.peer(Role::Bob).outcome().punished, Role::Alice);
        EXPECT_GE(sim.balance(Role::Bob), 100000 - cfg.channel.tower_reward);
    } else {
        EXPECT_NE(sim.peer(Role::Bob).outcome().punished, Role::Alice);
        EXPECT_LT(sim.balance(Role::Bob), 56000);
    }
    EXPECT_TRUE(sim.chain().audit().empty());
}

INSTANTIATE_TEST_SUITE_P(Paths, Betrayal, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "Separate" : "Shared"; });
