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

#include "graph_fixture.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace otspc;
using namespace otspc::txgraph;
using otspc::testing::GraphFixture;
using chain::Reject;
using script::Slot;

namespace {

crypto::OTSignature ots_of(crypto::OTKeyPair& key, std::uint32_t v)
{
    return key.sign(v);
}

script::SigningMaterial with_ots(script::SigningMaterial m, const crypto::OTSignature& sig)
{
    m.ots = sig;
    return m;
}

}  // namespace

TEST(TxGraphSetup, ConnectorAmounts)
{
    GraphFixture f;
    f.open();
    const auto& outs = f.setup.outputs;
    ASSERT_EQ(outs.size(), 6u) << "exact funding leaves no change";
    EXPECT_EQ(outs[kFundsOut].amount, 100000);
    EXPECT_EQ(outs[kUnilateralExitOut].amount, 3000);
    for (auto i : {kBobDisputesOut, kAliceDisputesOut, kWtbDisputesOut, kWtaDisputesOut})
        EXPECT_EQ(outs[i].amount, 2000);
    EXPECT_EQ(f.params.connector_total(), 11000);
}

TEST(TxGraphSetup, ChangeAndShortfall)
{
    GraphFixture f;
    f.open(250);
    EXPECT_EQ(f.setup.outputs.size(), 8u);

    GraphFixture g;
    auto fa = g.funding(Role::Alice, 50000);
    auto fb = g.funding(Role::Bob, 100000);
    try {
        build_setup(g.params, fa, fb);
        FAIL() << "expected InsufficientFunding";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientFunding);
    }
}

TEST(TxGraphSetup, SharedModeHasNoTowerOutputs)
{
    GraphFixture f(1, false);
    f.open();
    EXPECT_EQ(f.setup.outputs.size(), 4u);
    EXPECT_FALSE(f.anchors.wta_disputes.has_value());
    EXPECT_EQ(f.anchors.tower_channel_id(), f.setup.txid());
}

TEST(TxGraphSetup, LevelTwoAnchor)
{
    GraphFixture f(2);
    f.open();
    ASSERT_EQ(f.setup.outputs.size(), 5u);
    EXPECT_EQ(f.setup.outputs[kWtAnchorOut].amount, 4000);
    ASSERT_TRUE(f.anchors.wt_anchor_tx);
    EXPECT_EQ(f.anchors.wt_anchor_tx->kind, chain::TxKind::WTDisputes);
    EXPECT_EQ(f.anchors.tower_channel_id(), f.anchors.wt_anchor_tx->txid());
    EXPECT_EQ(f.anchors.wta_disputes->at.txid, f.anchors.tower_channel_id());

    auto other = f.params;
    other.anchor_nonce = {9, 9, 9};
    EXPECT_NE(build_wt_structures(other, f.setup).txid(), f.anchors.wt_anchor_tx->txid());

    auto wt = *f.anchors.wt_anchor_tx;
    EXPECT_TRUE(f.publish(wt).accepted());
    f.chain.mine_blocks(1);
    EXPECT_TRUE(f.chain.unspent(f.anchors.wta_disputes->at));
}

TEST(TxGraphSetup, LevelOneHasNoTowerStructure)
{
    GraphFixture f;
    f.open();
    try {
        build_wt_structures(f.params, f.setup);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::WrongLevel);
    }
}

TEST(TxGraphSetup, LevelThreeRoutesThroughStartExit)
{
    GraphFixture f(3);
    f.open();
    EXPECT_EQ(f.setup.outputs.size(), 4u);
    EXPECT_EQ(f.setup.outputs[1].amount, 7000);
    ASSERT_TRUE(f.anchors.wt_anchor_tx);
    EXPECT_EQ(f.anchors.wt_anchor_tx->kind, chain::TxKind::StartExit);
    EXPECT_EQ(f.anchors.exit.at, f.anchors.wt_anchor_tx->outpoint(0));
    EXPECT_EQ(f.anchors.exit.amount, 3000);
}

TEST(TxGraphExit, HonestUnilateralExit)
{
    GraphFixture f;
    f.open();
    auto s = f.state(100, 100, 60000, 40000);
    auto set = build_exit_set(f.params, f.anchors, s);
    ASSERT_TRUE(f.publish(set.commit_exit).accepted());
    auto m = with_ots(f.preimages(), ots_of(f.k_a, 100));
    ASSERT_TRUE(f.publish(set.assert_exit, m).accepted());
    f.chain.mine_blocks(1);
    f.chain.mine_blocks(f.params.T - 1);
    auto early = set.finalize_exit;
    EXPECT_EQ(f.publish(early).reason, Reject::SeqNotMatured);
    f.chain.mine_blocks(1);
    ASSERT_TRUE(f.publish(set.finalize_exit).accepted());
    f.chain.mine_blocks(1);
    EXPECT_EQ(f.balance(f.pay_a), 60000);
    EXPECT_EQ(f.balance(f.pay_b), 40000);
    EXPECT_TRUE(f.chain.audit().empty());
    EXPECT_EQ(f.chain.utxo_total() + f.chain.fees_total(), f.chain.minted_total());
}

TEST(TxGraphExit, AssertWitnessCarriesSignedEsn)
{
    GraphFixture f;
    f.open();
    auto set = build_exit_set(f.params, f.anchors, f.state(3, 100, 50000, 50000));
    f.publish(set.commit_exit);
    auto m = with_ots(f.preimages(), ots_of(f.k_a, 100));
    ASSERT_TRUE(f.publish(set.assert_exit, m).accepted());
    const auto& w = f.chain.observe_witness(set.assert_exit.txid(), 0);
    auto sig = scrape_ots(w, f.ot);
    ASSERT_TRUE(sig);
    EXPECT_EQ(crypto::ots_recover_value(f.params.k_a, *sig), 100u);
}

TEST(TxGraphExit, FastFinalizeBeforeTimeout)
{
    GraphFixture f;
    f.open();
    auto set = build_exit_set(f.params, f.anchors, f.state(1, 1, 30000, 70000));
    select_exit_branch(set.commit_exit, 0, Role::Bob);
    ASSERT_TRUE(f.publish(set.commit_exit).accepted());
    select_assert_branch(set.assert_exit, Role::Bob, 1);
    ASSERT_TRUE(f.publish(set.assert_exit, with_ots(f.preimages(), ots_of(f.k_b, 1))).accepted());
    select_fast_finalize(set.finalize_exit);
    ASSERT_TRUE(f.publish(set.finalize_exit).accepted());
    f.chain.mine_blocks(1);
    EXPECT_EQ(f.balance(f.pay_a), 30000);
    EXPECT_EQ(f.balance(f.pay_b), 70000);
}

TEST(TxGraphExit, ExpireAwardsAllFunds)
{
    for (Role staller : {Role::Alice, Role::Bob}) {
        GraphFixture f;
        f.open();
        auto stale = build_exit_set(f.params, f.anchors, f.state(4, 4, 90000, 10000));
        auto latest = build_exit_set(f.params, f.anchors, f.state(9, 9, 20000, 80000));
        select_exit_branch(stale.commit_exit, 0, staller);
        script::SigningMaterial own;
        (staller == Role::Alice ? own.preimage_a : own.preimage_b) = staller == Role::Alice ? f.p_a : f.p_b;
        ASSERT_TRUE(f.publish(stale.commit_exit, own).accepted());
        f.chain.mine_blocks(1);

        // The latest template's signature covers the stale commitment too.
        auto expire = latest.expire_of(staller);
        auto sigs = f.cosign(expire);
        retarget_expire(expire, stale.commit_exit.outpoint(0), stale.commit_exit.outputs[0].lock);
        auto revealed = scrape_preimage(f.chain.observe_witness(stale.commit_exit.txid(), 0),
                                        f.params.timeout_hash_of(staller));
        ASSERT_TRUE(revealed);
        script::SigningMaterial m;
        (staller == Role::Alice ? m.preimage_a : m.preimage_b) = *revealed;
        fill_witnesses(expire, sigs, m);
        f.chain.mine_blocks(f.params.T - 1);
        EXPECT_EQ(f.chain.submit(expire).reason, Reject::SeqNotMatured);
        f.chain.mine_blocks(1);
        ASSERT_TRUE(f.chain.submit(expire).accepted()) << role_name(staller);
        f.chain.mine_blocks(1);
        const auto& winner = staller == Role::Alice ? f.pay_b : f.pay_a;
        EXPECT_EQ(f.balance(winner), f.params.i_bal);
    }
}

TEST(TxGraphPunish, StaleAssertIsPunished)
{
    GraphFixture f;
    f.open();
    auto old_set = build_exit_set(f.params, f.anchors, f.state(50, 50, 90000, 10000));
    auto punish = build_punish_set(f.params, f.anchors, f.state(100, 100, 40000, 60000));
    ASSERT_TRUE(f.publish(old_set.commit_exit).accepted());
    ASSERT_TRUE(f.publish(old_set.assert_exit, with_ots(f.preimages(), ots_of(f.k_a, 50))).accepted());
    f.chain.mine_blocks(1);

    auto scraped = scrape_ots(f.chain.observe_witness(old_set.assert_exit.txid(), 0), f.ot);
    ASSERT_TRUE(scraped);
    auto pair = punish.against(Role::Alice);
    ASSERT_TRUE(f.publish(pair.commit).accepted());
    script::SigningMaterial m;
    m.ots = *scraped;
    ASSERT_TRUE(f.publish(pair.punish, m).accepted());
    f.chain.mine_blocks(1);
    EXPECT_EQ(f.balance(f.pay_b), f.params.i_bal);
    EXPECT_EQ(pair.punish.outputs.size(), 1u);
    EXPECT_TRUE(f.chain.audit().empty());
}

TEST(TxGraphPunish, LatestAssertIsNotPunishable)
{
    GraphFixture f;
    f.open();
    auto set = build_exit_set(f.params, f.anchors, f.state(100, 100, 40000, 60000));
    auto punish = build_punish_set(f.params, f.anchors, f.state(100, 100, 40000, 60000));
    f.publish(set.commit_exit);
    f.publish(set.assert_exit, with_ots(f.preimages(), ots_of(f.k_a, 100)));
    auto pair = punish.against(Role::Alice);
    ASSERT_TRUE(f.publish(pair.commit).accepted());
    script::SigningMaterial m;
    m.ots = *scrape_ots(f.chain.observe_witness(set.assert_exit.txid(), 0), f.ot);
    auto r = f.publish(pair.punish, m);
    EXPECT_EQ(r.reason, Reject::ScriptFailure);
    EXPECT_NE(r.detail.find("VERIFY"), std::string::npos) << r.detail;
}

TEST(TxGraphPunish, StateZeroHasNoPunishSet)
{
    GraphFixture f;
    f.open();
    try {
        build_punish_set(f.params, f.anchors, f.state(0, 0, 50000, 50000));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::StateZero);
    }
}

TEST(TxGraphPunish, TowerPairPaysClientAndReward)
{
    GraphFixture f;
    f.open();
    auto set = build_punish_set(f.params, f.anchors, f.state(7, 7, 1, 99999));
    ASSERT_TRUE(set.wta && set.wtb);
    const auto& p = set.wta->punish;
    ASSERT_EQ(p.outputs.size(), 2u);
    EXPECT_EQ(p.outputs[0].amount, f.params.i_bal);
    EXPECT_EQ(p.outputs[0].lock, f.params.alice_address);
    EXPECT_EQ(p.outputs[1].amount, f.params.tower_reward);
    EXPECT_EQ(p.outputs[1].lock, f.params.wta_address);
    EXPECT_EQ(set.wta->commit.inputs[0].prevout, f.anchors.wta_disputes->at);
}

TEST(TxGraphPunish, TemplateRoundTripRebuildsIdentically)
{
    GraphFixture f(3);
    f.open();
    auto s = f.state(12, 12, 30000, 70000);
    auto set = build_punish_set(f.params, f.anchors, s);
    auto t = punish_template(f.params, Role::Bob, true);
    auto wire = t.serialize();
    ByteReader r(wire);
    auto back = PunishTemplate::deserialize(r);
    r.expect_done();
    auto rebuilt = build_punish_pair(back, *f.anchors.wta_disputes, f.anchors.funds, tower_threshold(f.params, s));
    EXPECT_EQ(rebuilt.commit.serialize(), set.wta->commit.serialize());
    EXPECT_EQ(rebuilt.punish.serialize(), set.wta->punish.serialize());
    EXPECT_EQ(tower_threshold(f.params, s), 13u);
}

TEST(TxGraphTemplates, RebuildIsDeterministic)
{
    GraphFixture f;
    f.open();
    auto s = f.state(5, 8, 45000, 55000);
    auto a = build_exit_set(f.params, f.anchors, s);
    auto b = build_exit_set(f.params, derive_anchors(f.params, f.setup), s);
    EXPECT_EQ(a.commit_exit.serialize(), b.commit_exit.serialize());
    EXPECT_EQ(a.finalize_exit.serialize(), b.finalize_exit.serialize());
    EXPECT_EQ(a.expire_bob.sighash(), b.expire_bob.sighash());
}

TEST(TxGraphTemplates, ClosureOverSetupAndTemplates)
{
    for (int level : {1, 2, 3}) {
        GraphFixture f(level);
        f.open();
        auto s = f.state(3, 3, 50000, 50000);
        auto exits = build_exit_set(f.params, f.anchors, s);
        auto punish = build_punish_set(f.params, f.anchors, s);
        std::vector<const chain::Transaction*> all{&f.setup,          &exits.commit_exit, &exits.assert_exit,
                                                   &exits.finalize_exit, &exits.expire_alice, &exits.expire_bob,
                                                   &punish.against_alice.commit, &punish.against_alice.punish,
                                                   &punish.against_bob.commit,   &punish.against_bob.punish};
        if (f.anchors.wt_anchor_tx) all.push_back(&*f.anchors.wt_anchor_tx);
        for (const auto* p : {&punish.wta, &punish.wtb}) {
            ASSERT_TRUE(p->has_value());
            all.push_back(&(*p)->commit);
            all.push_back(&(*p)->punish);
        }
        std::set<chain::Outpoint> outputs;
        for (const auto* tx : all)
            for (std::uint32_t i = 0; i < tx->outputs.size(); ++i) outputs.insert(tx->outpoint(i));
        for (const auto* tx : all) {
            if (tx == &f.setup) continue;
            for (const auto& in : tx->inputs) {
                EXPECT_TRUE(outputs.count(in.prevout)) << tx->name << " level " << level;
                // The recorded lock is the lock of the referenced output.
                for (const auto* src : all)
                    if (src->txid() == in.prevout.txid) EXPECT_EQ(src->outputs[in.prevout.index].lock, in.spent_lock);
            }
        }
    }
}

TEST(TxGraphPaths, EveryLeafSucceedsOnlyWithItsOwnWitness)
{
    GraphFixture f(2);
    f.open();
    auto s = f.state(2, 2, 50000, 50000);
    auto exits = build_exit_set(f.params, f.anchors, s);
    const auto sig_a = f.k_a.sign(2);

    struct Case {
        std::string name;
        script::OutputLock lock;
        script::PathDescriptor path;
        std::uint32_t confirmations;
    };
    const auto commit_lock = commit_exit_lock(f.params, 2);
    const auto ready = ready_lock(f.params);
    const auto punish = punish_lock(f.params.keyset, f.params.k_a, 3);
    const auto ue = script::OutputLock::script_hash(unilateral_exit_script(f.params));
    std::vector<Case> cases{
        {"exit-alice", ue, {0, 0, {Slot::PreimageA, Slot::BranchFalse, Slot::CovenantSig}}, 0},
        {"exit-bob", ue, {0, 0, {Slot::PreimageB, Slot::BranchTrue, Slot::CovenantSig}}, 0},
        {"assert", commit_lock, {0, 1, {Slot::PreimageE, Slot::OtsSig, Slot::BranchFalse, Slot::CovenantSig}}, 0},
        {"expire-alice", commit_lock, {1, 2, {Slot::PreimageA, Slot::CovenantSig}}, 6},
        {"expire-bob", commit_lock, {2, 3, {Slot::PreimageB, Slot::CovenantSig}}, 6},
        {"finalize", ready, {0, 1, {Slot::CovenantSig}}, 6},
        {"fast-finalize", ready, {1, 2, {Slot::PreimageB, Slot::PreimageA, Slot::CovenantSig}}, 0},
        {"punish", punish, {0, 0, {Slot::OtsSig, Slot::CovenantSig}}, 0},
    };
    // One digest for all cases; each case signs its own path.
    const auto digest = crypto::sha256(as_bytes("matrix"));
    auto material = [&](const Case& c) {
        auto m = f.preimages();
        m.ots = sig_a;
        m.covenant = crypto::covenant_aggregate(
            f.params.keyset, crypto::covenant_partial_sign(f.cov_a, f.params.keyset, digest, *c.path.covenant_path),
            crypto::covenant_partial_sign(f.cov_b, f.params.keyset, digest, *c.path.covenant_path));
        return m;
    };
    auto run = [&](const script::OutputLock& lock, const script::Witness& w, std::uint32_t conf) {
        script::ExecContext ctx;
        ctx.sighash = digest;
        ctx.confirmations = conf;
        ctx.signers = &f.registry;
        return script::verify_spend(lock.kind(), lock.commitment(), w, ctx);
    };
    for (const auto& c : cases) {
        auto w = script::build_witness_for(c.lock, c.path, material(c));
        EXPECT_TRUE(run(c.lock, w, c.confirmations).ok()) << c.name << ": " << run(c.lock, w, c.confirmations).describe();
        for (const auto& other : cases) {
            if (&other == &c || !(other.lock == c.lock)) continue;
            if (other.path.leaf == c.path.leaf) continue;  // same leaf, other branch: covered below
            auto wrong = script::build_witness_for(c.lock, other.path, material(other));
            wrong.script = c.lock.reveal(c.path.leaf);
            wrong.leaf_index = c.path.leaf;
            EXPECT_FALSE(run(c.lock, wrong, 6).ok()) << c.name << " with witness of " << other.name;
        }
        for (std::size_t i = 0; i < w.stack.size(); ++i) {
            auto bad = w;
            if (bad.stack[i].empty())
                bad.stack[i] = {1};
            else
                bad.stack[i][bad.stack[i].size() / 2] ^= 0x01;
            EXPECT_FALSE(run(c.lock, bad, 6).ok()) << c.name << " item " << i;
        }
    }
}

TEST(TxGraphClose, ProportionalSplit)
{
    GraphFixture f;
    f.open();
    const Amount fee = 400;
    auto even = build_cooperative_close(f.params, f.anchors, f.state(4, 4, 50000, 50000), fee);
    ASSERT_EQ(even.outputs.size(), 2u);
    EXPECT_EQ(even.outputs[0].amount, even.outputs[1].amount);
    EXPECT_EQ(even.outputs[0].amount, 50000 + 11000 / 2 - fee / 2);

    auto one_sided = build_cooperative_close(f.params, f.anchors, f.state(4, 4, 100000, 0), fee);
    ASSERT_EQ(one_sided.outputs.size(), 1u);
    EXPECT_EQ(one_sided.outputs[0].lock, f.params.alice_address);

    ASSERT_TRUE(f.publish(even).accepted());
    f.chain.mine_blocks(1);
    EXPECT_EQ(f.chain.fees_total(), fee);
    EXPECT_EQ(f.balance(f.pay_a) + f.balance(f.pay_b), 100000 + 11000 - fee);
    EXPECT_TRUE(f.chain.audit().empty());
}

TEST(TxGraphPayload, LevelThreeCommitCarriesTowerSlots)
{
    CommitPayload p;
    p.esn = 73;
    p.for_alice_tower = crypto::encrypt(crypto::sha256(as_bytes("k")).span(), Bytes(kTowerPayloadSize, 7),
                                        crypto::Iv{});
    p.for_bob_tower = p.for_alice_tower;
    auto bytes = p.encode();
    EXPECT_EQ(bytes.size(), 4 + 2 * kTowerSlotSize);
    EXPECT_EQ(kTowerPayloadSize, 130u);
    auto back = CommitPayload::decode(bytes);
    ASSERT_TRUE(back);
    EXPECT_EQ(back->esn, 73u);
    EXPECT_EQ(back->for_bob_tower, p.for_bob_tower);
    EXPECT_FALSE(CommitPayload::decode(ByteSpan(bytes).subspan(1)));

    GraphFixture f(3);
    f.open();
    auto set = build_exit_set(f.params, f.anchors, f.state(73, 73, 50000, 50000), bytes);
    ASSERT_EQ(set.commit_exit.op_returns().size(), 1u);
    EXPECT_EQ(set.commit_exit.op_returns()[0], bytes);
}

TEST(TxGraphWeights, ReferenceConstants)
{
    auto w = exit_path_weights();
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(w[0].total, 417u);
    EXPECT_EQ(w[1].total, 1196u);
    EXPECT_EQ(w[2].total, 792u);
    std::uint32_t total = 0;
    for (const auto& r : w) {
        std::uint32_t sum = 0;
        for (const auto& p : r.parts) sum += p.second;
        EXPECT_EQ(sum, r.total);
        total += r.total;
    }
    EXPECT_EQ(total, 2405u);
}

TEST(TxGraphHtlc, FinalizeCarriesHtlcOutputs)
{
    GraphFixture f;
    f.open();
    auto s = f.state(2, 2, 45000, 50000);
    s.htlcs.push_back({1, Role::Alice, 3000, crypto::commit(f.p_e), 500});
    s.htlcs.push_back({2, Role::Bob, 2000, crypto::commit(f.p_a), 600});
    ASSERT_TRUE(s.conserves([&] {
        auto p = f.params;
        p.i_bal = 100000;
        return p;
    }()));
    auto set = build_exit_set(f.params, f.anchors, s);
    ASSERT_EQ(set.finalize_exit.outputs.size(), 4u);
    EXPECT_EQ(set.finalize_exit.outputs[2].amount, 3000);
    EXPECT_EQ(set.finalize_exit.outputs[3].lock, htlc::htlc_lock(s.htlcs[1], f.params.payout));
    EXPECT_EQ(estimate_weight(set.finalize_exit).total, 792u + 2 * 124u);
}
