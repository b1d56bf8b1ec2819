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

#include "otspc/txgraph/txgraph.hpp"

#include <algorithm>
#include <set>

namespace otspc::txgraph {

using chain::Transaction;
using chain::TxInput;
using chain::TxKind;
using chain::TxOutput;
using script::OutputLock;
using script::PathDescriptor;
using script::Script;
using script::Slot;
namespace op = script::op;

namespace {

std::string with_index(const char* base, std::uint32_t isn)
{
    return std::string(base) + "(" + std::to_string(isn) + ")";
}

TxInput covenant_input(const Anchor& a, std::uint8_t path = 0)
{
    TxInput in;
    in.prevout = a.at;
    in.spent_lock = a.lock;
    in.path = PathDescriptor{0, path, {Slot::CovenantSig}};
    return in;
}

TxInput exit_input(const Anchor& a, Role who)
{
    TxInput in;
    in.prevout = a.at;
    in.spent_lock = a.lock;
    in.path.leaf = 0;
    in.path.covenant_path = 0;
    in.path.slots = {who == Role::Alice ? Slot::PreimageA : Slot::PreimageB,
                     who == Role::Bob ? Slot::BranchTrue : Slot::BranchFalse, Slot::CovenantSig};
    return in;
}

Anchor anchor_of(const Transaction& tx, std::uint32_t index)
{
    const auto& out = tx.outputs.at(index);
    return {tx.outpoint(index), out.amount, out.lock};
}

bool is_exit_lock(const ChannelParams& p, const OutputLock& lock)
{
    return lock == OutputLock::script_hash(unilateral_exit_script(p));
}

}  // namespace

// ---- scripts -------------------------------------------------------------

OutputLock cov_address(const crypto::CovenantKeySet& keyset)
{
    return OutputLock::script_hash({op::CovenantCheck{keyset, 0}});
}

Script unilateral_exit_script(const ChannelParams& p)
{
    return {op::CovenantCheck{p.keyset, 0}, op::If{}, op::CHashV{p.h_b}, op::Else{}, op::CHashV{p.h_a}, op::EndIf{}};
}

OutputLock commit_exit_lock(const ChannelParams& p, std::uint32_t esn)
{
    Script assert_leaf{op::CovenantCheck{p.keyset, 1}, op::If{},   op::OTCSigV{{p.k_b}}, op::CValV{esn},
                       op::Else{},                     op::OTCSigV{{p.k_a}},        op::CValV{esn}, op::EndIf{}};
    if (p.privacy_level >= 2) assert_leaf.push_back(op::CHashV{p.h_e});
    Script expire_alice{op::CovenantCheck{p.keyset, 2}, op::CSeqV{p.T}, op::CHashV{p.h_a}};
    Script expire_bob{op::CovenantCheck{p.keyset, 3}, op::CSeqV{p.T}, op::CHashV{p.h_b}};
    return OutputLock::tap_tree({std::move(assert_leaf), std::move(expire_alice), std::move(expire_bob)});
}

OutputLock ready_lock(const ChannelParams& p)
{
    Script after_delay{op::CovenantCheck{p.keyset, 1}, op::CSeqV{p.T}};
    Script fast{op::CovenantCheck{p.keyset, 2}, op::CHashV{p.h_a}, op::CHashV{p.h_b}};
    return OutputLock::tap_tree({std::move(after_delay), std::move(fast)});
}

OutputLock punish_lock(const crypto::CovenantKeySet& keyset, const crypto::OTPublicKey& victim,
                       std::uint32_t threshold)
{
    return OutputLock::script_hash({op::CovenantCheck{keyset, 0}, op::OTCSigV{{victim}}, op::PushInt{threshold},
                                    op::LessThan{}, op::Verify{}});
}

// ---- setup ---------------------------------------------------------------

Transaction build_setup(const ChannelParams& p, const FundingSource& alice, const FundingSource& bob)
{
    p.validate();
    if (alice.deposit < 0 || bob.deposit < 0 || alice.deposit + bob.deposit != p.i_bal)
        throw Error(Errc::InvalidParams, "deposits must add up to I_BAL");
    const Amount connectors = p.connector_total();
    const Amount share_a = connectors / 2;
    const Amount share_b = connectors - share_a;
    const Amount change_a = alice.amount - alice.deposit - share_a;
    const Amount change_b = bob.amount - bob.deposit - share_b;
    if (change_a < 0) throw Error(Errc::InsufficientFunding, "alice's funding does not cover her share");
    if (change_b < 0) throw Error(Errc::InsufficientFunding, "bob's funding does not cover his share");

    Transaction tx;
    tx.name = "Setup";
    tx.kind = TxKind::Setup;
    for (const auto* src : {&alice, &bob}) {
        TxInput in;
        in.prevout = src->outpoint;
        in.spent_lock = src->lock;
        in.path = PathDescriptor{0, std::nullopt, {Slot::SingleSig}};
        tx.inputs.push_back(std::move(in));
    }
    const auto cov = cov_address(p.keyset);
    const Amount e = p.epsilon;
    tx.outputs.push_back({p.i_bal, cov, std::nullopt});
    if (p.privacy_level == 3) {
        tx.outputs.push_back({7 * e, cov, std::nullopt});
    } else {
        tx.outputs.push_back({3 * e, OutputLock::script_hash(unilateral_exit_script(p)), std::nullopt});
    }
    tx.outputs.push_back({2 * e, cov, std::nullopt});
    tx.outputs.push_back({2 * e, cov, std::nullopt});
    if (p.privacy_level == 2) {
        tx.outputs.push_back({4 * e, cov, std::nullopt});
    } else if (p.privacy_level == 1 && p.separate_wt_outputs) {
        tx.outputs.push_back({2 * e, cov, std::nullopt});
        tx.outputs.push_back({2 * e, cov, std::nullopt});
    }
    if (change_a > 0) tx.outputs.push_back({change_a, alice.change, std::nullopt});
    if (change_b > 0) tx.outputs.push_back({change_b, bob.change, std::nullopt});
    return tx;
}

Transaction build_wt_structures(const ChannelParams& p, const Transaction& setup)
{
    return build_wt_structures(p, setup.txid());
}

Transaction build_wt_structures(const ChannelParams& p, const chain::Txid& setup_txid)
{
    if (p.privacy_level < 2) throw Error(Errc::WrongLevel, "tower anchors exist only at levels 2 and 3");
    const auto cov = cov_address(p.keyset);
    const Amount e = p.epsilon;
    Transaction tx;
    if (p.privacy_level == 2) {
        tx.name = "WTDisputes";
        tx.kind = TxKind::WTDisputes;
        tx.inputs.push_back(covenant_input({{setup_txid, kWtAnchorOut}, 4 * e, cov}));
    } else {
        tx.name = "StartExit";
        tx.kind = TxKind::StartExit;
        tx.inputs.push_back(covenant_input({{setup_txid, kUnilateralExitOut}, 7 * e, cov}));
        tx.outputs.push_back({3 * e, OutputLock::script_hash(unilateral_exit_script(p)), std::nullopt});
    }
    tx.outputs.push_back({2 * e, cov, std::nullopt});
    tx.outputs.push_back({2 * e, cov, std::nullopt});
    tx.outputs.push_back(TxOutput::data(p.anchor_nonce));
    return tx;
}

chain::Txid ChannelAnchors::tower_channel_id() const
{
    return wt_anchor_tx ? wt_anchor_tx->txid() : setup_txid;
}

ChannelAnchors derive_anchors(const ChannelParams& p, const Transaction& setup)
{
    ChannelAnchors a;
    a.setup_txid = setup.txid();
    a.funds = anchor_of(setup, kFundsOut);
    a.bob_disputes = anchor_of(setup, kBobDisputesOut);
    a.alice_disputes = anchor_of(setup, kAliceDisputesOut);
    std::uint32_t connector_count = 3;
    if (p.privacy_level == 1) {
        a.exit = anchor_of(setup, kUnilateralExitOut);
        if (p.separate_wt_outputs) {
            a.wtb_disputes = anchor_of(setup, kWtbDisputesOut);
            a.wta_disputes = anchor_of(setup, kWtaDisputesOut);
            connector_count = 5;
        }
    } else {
        auto wt = build_wt_structures(p, setup);
        const std::uint32_t base = p.privacy_level == 2 ? 0 : 1;
        a.exit = p.privacy_level == 2 ? anchor_of(setup, kUnilateralExitOut) : anchor_of(wt, 0);
        a.wtb_disputes = anchor_of(wt, base);
        a.wta_disputes = anchor_of(wt, base + 1);
        a.wt_anchor_tx = std::move(wt);
        connector_count = p.privacy_level == 2 ? 4 : 3;
    }
    for (std::uint32_t i = 1; i <= connector_count; ++i) a.connectors.push_back(anchor_of(setup, i));
    return a;
}

// ---- exit set ------------------------------------------------------------

ExitSet build_exit_set(const ChannelParams& p, const ChannelAnchors& a, const StateSnapshot& s,
                       const Bytes& commit_payload)
{
    const Amount e = p.epsilon;
    ExitSet set;

    auto& commit = set.commit_exit;
    commit.name = with_index("CommitExit", s.isn);
    commit.kind = TxKind::CommitExit;
    commit.inputs.push_back(exit_input(a.exit, Role::Alice));
    const auto commit_lock = commit_exit_lock(p, s.esn);
    commit.outputs.push_back({2 * e, commit_lock, std::nullopt});
    if (!commit_payload.empty()) commit.outputs.push_back(TxOutput::data(commit_payload));
    const Anchor commit_out{commit.outpoint(0), 2 * e, commit_lock};

    auto& assert_tx = set.assert_exit;
    assert_tx.name = with_index("AssertExitState", s.isn);
    assert_tx.kind = TxKind::AssertExitState;
    TxInput ain;
    ain.prevout = commit_out.at;
    ain.spent_lock = commit_lock;
    ain.path.covenant_path = 1;
    assert_tx.inputs.push_back(std::move(ain));
    select_assert_branch(assert_tx, Role::Alice, p.privacy_level);
    const auto ready = ready_lock(p);
    assert_tx.outputs.push_back({e, ready, std::nullopt});
    assert_tx.outputs.push_back({e, p.shared_address, std::nullopt});

    auto& fin = set.finalize_exit;
    fin.name = with_index("FinalizeExit", s.isn);
    fin.kind = TxKind::FinalizeExit;
    fin.inputs.push_back(covenant_input(a.funds));
    TxInput rin;
    rin.prevout = assert_tx.outpoint(0);
    rin.spent_lock = ready;
    rin.path = PathDescriptor{0, 1, {Slot::CovenantSig}};
    fin.inputs.push_back(std::move(rin));
    if (s.a_bal > 0) fin.outputs.push_back({s.a_bal, p.alice_address, std::nullopt});
    if (s.b_bal > 0) fin.outputs.push_back({s.b_bal, p.bob_address, std::nullopt});
    for (const auto& h : s.htlcs) fin.outputs.push_back({h.amount, htlc::htlc_lock(h, p.payout), std::nullopt});

    for (Role staller : {Role::Alice, Role::Bob}) {
        auto& tx = staller == Role::Alice ? set.expire_alice : set.expire_bob;
        tx.name = staller == Role::Alice ? "ExpireAliceExit" : "ExpireBobExit";
        tx.kind = staller == Role::Alice ? TxKind::ExpireAliceExit : TxKind::ExpireBobExit;
        TxInput cin;
        cin.prevout = commit_out.at;
        cin.anyprevout = true;
        cin.spent_lock = commit_lock;
        cin.path = staller == Role::Alice ? PathDescriptor{1, 2, {Slot::PreimageA, Slot::CovenantSig}}
                                          : PathDescriptor{2, 3, {Slot::PreimageB, Slot::CovenantSig}};
        tx.inputs.push_back(std::move(cin));
        tx.inputs.push_back(covenant_input(a.funds));
        tx.outputs.push_back({a.funds.amount, p.address_of(other(staller)), std::nullopt});
    }
    return set;
}

// ---- punishment ----------------------------------------------------------

Bytes PunishTemplate::serialize() const
{
    ByteWriter w;
    w.fixed(keyset.alice);
    w.fixed(keyset.bob);
    w.raw(victim_key.serialize());
    w.u8(victim == Role::Alice ? 0 : 1);
    w.raw(beneficiary.serialize());
    w.u8(tower ? 1 : 0);
    if (tower) w.raw(tower->serialize());
    w.i64(reward);
    return std::move(w).bytes();
}

PunishTemplate PunishTemplate::deserialize(ByteReader& in)
{
    PunishTemplate t;
    t.keyset.alice = in.fixed<32, crypto::KeyIdTag>();
    t.keyset.bob = in.fixed<32, crypto::KeyIdTag>();
    t.victim_key = crypto::OTPublicKey::deserialize(in);
    t.victim = in.u8() == 0 ? Role::Alice : Role::Bob;
    t.beneficiary = OutputLock::deserialize(in);
    if (in.u8() != 0) t.tower = OutputLock::deserialize(in);
    t.reward = in.i64();
    return t;
}

PunishTemplate punish_template(const ChannelParams& p, Role victim, bool for_tower)
{
    PunishTemplate t;
    t.keyset = p.keyset;
    t.victim_key = p.ots_key_of(victim);
    t.victim = victim;
    t.beneficiary = p.address_of(other(victim));
    if (for_tower) {
        t.tower = p.tower_address_of(other(victim));
        t.reward = p.tower_reward;
    }
    return t;
}

PunishPair build_punish_pair(const PunishTemplate& t, const Anchor& dispute, const Anchor& funds,
                             std::uint32_t threshold)
{
    const bool alice = t.victim == Role::Alice;
    const bool tower = t.tower.has_value();
    // Tower kinds are named after the client, who is the beneficiary.
    PunishPair pair;
    auto& commit = pair.commit;
    if (tower) {
        commit.name = alice ? "WTB-CommitPunishAlice" : "WTA-CommitPunishBob";
        commit.kind = alice ? TxKind::WTBCommitPunish : TxKind::WTACommitPunish;
    } else {
        commit.name = alice ? "CommitPunishAlice" : "CommitPunishBob";
        commit.kind = alice ? TxKind::CommitPunishAlice : TxKind::CommitPunishBob;
    }
    commit.name += "(" + std::to_string(threshold) + ")";
    commit.inputs.push_back(covenant_input(dispute));
    const Amount punish_amount = dispute.amount / 2;
    const auto lock = punish_lock(t.keyset, t.victim_key, threshold);
    commit.outputs.push_back({punish_amount, lock, std::nullopt});

    auto& punish = pair.punish;
    if (tower) {
        punish.name = alice ? "WTB-PunishAlice" : "WTA-PunishBob";
        punish.kind = alice ? TxKind::WTBPunish : TxKind::WTAPunish;
    } else {
        punish.name = alice ? "PunishAlice" : "PunishBob";
        punish.kind = alice ? TxKind::PunishAlice : TxKind::PunishBob;
    }
    punish.name += "(" + std::to_string(threshold) + ")";
    punish.inputs.push_back(covenant_input(funds));
    TxInput pin;
    pin.prevout = commit.outpoint(0);
    pin.spent_lock = lock;
    pin.path = PathDescriptor{0, 0, {Slot::OtsSig, Slot::CovenantSig}};
    punish.inputs.push_back(std::move(pin));
    punish.outputs.push_back({funds.amount, t.beneficiary, std::nullopt});
    if (tower && t.reward > 0) punish.outputs.push_back({std::min(t.reward, punish_amount), *t.tower, std::nullopt});
    return pair;
}

std::uint32_t tower_threshold(const ChannelParams& p, const StateSnapshot& s)
{
    return p.privacy_level == 3 ? s.esn + 1 : s.esn;
}

PunishSet build_punish_set(const ChannelParams& p, const ChannelAnchors& a, const StateSnapshot& s)
{
    if (s.isn == 0) throw Error(Errc::StateZero, "state 0 has nothing to revoke");
    PunishSet set;
    set.against_alice = build_punish_pair(punish_template(p, Role::Alice, false), a.bob_disputes, a.funds, s.esn);
    set.against_bob = build_punish_pair(punish_template(p, Role::Bob, false), a.alice_disputes, a.funds, s.esn);
    const auto wt = tower_threshold(p, s);
    if (a.wta_disputes)
        set.wta = build_punish_pair(punish_template(p, Role::Bob, true), *a.wta_disputes, a.funds, wt);
    if (a.wtb_disputes)
        set.wtb = build_punish_pair(punish_template(p, Role::Alice, true), *a.wtb_disputes, a.funds, wt);
    return set;
}

// ---- cooperative close ---------------------------------------------------

Transaction build_cooperative_close(const ChannelParams& p, const ChannelAnchors& a, const StateSnapshot& s,
                                    Amount fee)
{
    Transaction tx;
    tx.name = with_index("CooperativeClose", s.isn);
    tx.kind = TxKind::CooperativeClose;
    tx.inputs.push_back(covenant_input(a.funds));
    Amount swept = 0;
    for (const auto& c : a.connectors) {
        tx.inputs.push_back(is_exit_lock(p, c.lock) ? exit_input(c, Role::Alice) : covenant_input(c));
        swept += c.amount;
    }
    // Open HTLCs go back to their senders.
    Amount ra = s.a_bal;
    Amount rb = s.b_bal;
    for (const auto& h : s.htlcs) (h.sender == Role::Alice ? ra : rb) += h.amount;
    const Amount extra = a.funds.amount - ra - rb + swept - fee;
    Amount extra_a = extra / 2;
    if (ra + rb > 0) extra_a = static_cast<Amount>(static_cast<__int128>(extra) * ra / (ra + rb));
    const Amount out_a = ra + extra_a;
    const Amount out_b = rb + (extra - extra_a);
    if (out_a > 0) tx.outputs.push_back({out_a, p.alice_address, std::nullopt});
    if (out_b > 0) tx.outputs.push_back({out_b, p.bob_address, std::nullopt});
    return tx;
}

// ---- witnesses -----------------------------------------------------------

std::vector<std::uint8_t> required_paths(const Transaction& tx)
{
    std::set<std::uint8_t> paths;
    for (const auto& in : tx.inputs)
        if (in.path.covenant_path) paths.insert(*in.path.covenant_path);
    if (tx.kind == TxKind::FinalizeExit) paths.insert(2);
    return {paths.begin(), paths.end()};
}

void fill_input(Transaction& tx, std::uint32_t input, const SigSet& sigs, const script::SigningMaterial& material)
{
    auto& in = tx.inputs.at(input);
    auto m = material;
    if (in.path.covenant_path) {
        auto it = sigs.find(*in.path.covenant_path);
        if (it == sigs.end())
            throw Error(Errc::MissingItem,
                        tx.name + ": no covenant signature for path " + std::to_string(*in.path.covenant_path));
        m.covenant = it->second;
    }
    in.witness = script::build_witness_for(in.spent_lock, in.path, m);
}

void fill_witnesses(Transaction& tx, const SigSet& sigs, const script::SigningMaterial& material)
{
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i) fill_input(tx, i, sigs, material);
}

void select_exit_branch(Transaction& tx, std::uint32_t input, Role who)
{
    auto& in = tx.inputs.at(input);
    in.path.slots = {who == Role::Alice ? Slot::PreimageA : Slot::PreimageB,
                     who == Role::Bob ? Slot::BranchTrue : Slot::BranchFalse, Slot::CovenantSig};
}

void select_assert_branch(Transaction& tx, Role who, int privacy_level)
{
    auto& path = tx.inputs.at(0).path;
    path.leaf = 0;
    path.covenant_path = 1;
    path.slots.clear();
    if (privacy_level >= 2) path.slots.push_back(Slot::PreimageE);
    path.slots.push_back(Slot::OtsSig);
    path.slots.push_back(who == Role::Bob ? Slot::BranchTrue : Slot::BranchFalse);
    path.slots.push_back(Slot::CovenantSig);
}

void select_fast_finalize(Transaction& tx)
{
    tx.inputs.at(1).path = PathDescriptor{1, 2, {Slot::PreimageB, Slot::PreimageA, Slot::CovenantSig}};
}

void retarget_expire(Transaction& tx, const chain::Outpoint& commit_out, const OutputLock& lock)
{
    auto& in = tx.inputs.at(0);
    in.prevout = commit_out;
    in.spent_lock = lock;
}

std::optional<crypto::OTSignature> scrape_ots(const script::Witness& w, const crypto::OTParams& params)
{
    for (const auto& item : w.stack)
        if (auto sig = crypto::OTSignature::parse(item, params)) return sig;
    return std::nullopt;
}

std::optional<crypto::Preimage> scrape_preimage(const script::Witness& w, const crypto::Hash160& digest)
{
    for (const auto& item : w.stack)
        if (item.size() == crypto::Preimage::size && crypto::hash160(item) == digest)
            return crypto::Preimage::from_span(item);
    return std::nullopt;
}

// ---- commit payload ------------------------------------------------------

namespace {

void write_slot(ByteWriter& w, const crypto::CipherPacket& p)
{
    if (p.ciphertext.size() != kTowerPayloadSize) throw Error(Errc::InvalidParams, "tower slot has wrong size");
    w.fixed(p.iv);
    w.raw(p.ciphertext);
    w.raw(p.tag);
}

crypto::CipherPacket read_slot(ByteReader& r)
{
    crypto::CipherPacket p;
    p.iv = r.fixed<12, crypto::IvTag>();
    auto ct = r.raw(kTowerPayloadSize);
    p.ciphertext.assign(ct.begin(), ct.end());
    auto tag = r.raw(16);
    std::copy(tag.begin(), tag.end(), p.tag.begin());
    return p;
}

}  // namespace

Bytes CommitPayload::encode() const
{
    ByteWriter w;
    w.u32(esn);
    write_slot(w, for_alice_tower);
    write_slot(w, for_bob_tower);
    return std::move(w).bytes();
}

std::optional<CommitPayload> CommitPayload::decode(ByteSpan data)
{
    if (data.size() != 4 + 2 * kTowerSlotSize) return std::nullopt;
    ByteReader r(data);
    CommitPayload out;
    out.esn = r.u32();
    out.for_alice_tower = read_slot(r);
    out.for_bob_tower = read_slot(r);
    return out;
}

// ---- weights -------------------------------------------------------------

WeightReport estimate_weight(const Transaction& tx)
{
    using namespace weights;
    WeightReport r;
    r.tx = tx.name;
    std::uint32_t spendable = 0;
    for (const auto& o : tx.outputs)
        if (o.spendable()) ++spendable;
    switch (tx.kind) {
    case TxKind::CommitExit:
        r.parts = {{"preimage", kPreimage}, {"aggregate-signature input", kAggregateInput}, {"output", kOutput}};
        break;
    case TxKind::AssertExitState:
        r.parts = {{"signed sequence number", kSignedSequence},
                   {"aggregate-signature input", kAggregateInput},
                   {"output", kOutput}};
        break;
    case TxKind::FinalizeExit:
        r.parts = {{"2-in/2-out", kFinalize}};
        for (std::uint32_t i = 2; i < spendable; ++i) r.parts.push_back({"extra output", kOutput});
        break;
    default:
        for (const auto& in : tx.inputs) {
            r.parts.push_back({"aggregate-signature input", kAggregateInput});
            for (auto s : in.path.slots) {
                if (s == Slot::OtsSig) r.parts.push_back({"signed sequence number", kSignedSequence});
                if (s == Slot::PreimageA || s == Slot::PreimageB || s == Slot::PreimageE || s == Slot::PaymentPreimage)
                    r.parts.push_back({"preimage", kPreimage});
            }
        }
        for (std::uint32_t i = 0; i < spendable; ++i) r.parts.push_back({"output", kOutput});
    }
    for (const auto& part : r.parts) r.total += part.second;
    return r;
}

std::vector<WeightReport> exit_path_weights()
{
    std::vector<WeightReport> out;
    for (auto [kind, name] : {std::pair{TxKind::CommitExit, "CommitExit(i)"},
                              std::pair{TxKind::AssertExitState, "AssertExitState(i)"},
                              std::pair{TxKind::FinalizeExit, "FinalizeExit(i)"}}) {
        Transaction tx;
        tx.name = name;
        tx.kind = kind;
        tx.outputs.resize(2);
        out.push_back(estimate_weight(tx));
    }
    return out;
}

}  // namespace otspc::txgraph
