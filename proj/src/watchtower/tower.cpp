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

#include "otspc/watchtower/tower.hpp"

#include "otspc/crypto/cipher.hpp"
#include "otspc/crypto/hashchain.hpp"
#include "otspc/error.hpp"

#include <json.hpp>

namespace otspc::watchtower {

using chain::Outpoint;
using chain::Transaction;
using chain::Txid;

namespace {

std::string short_hex(const crypto::Hash256& h)
{
    return h.hex().substr(0, 16);
}

}  // namespace

Tower::Tower(TowerConfig cfg, chain::Chain& chain) : cfg_(cfg), chain_(chain)
{
    if (cfg_.level < 1 || cfg_.level > 3) throw Error(Errc::InvalidParams, "tower level must be 1, 2 or 3");
}

void Tower::log(const std::string& event, const std::string& channel, const std::string& detail)
{
    nlohmann::ordered_json j;
    j["tick"] = now_;
    j["party"] = std::string("tower-") + role_name(cfg_.client);
    j["event"] = event;
    j["channel"] = channel;
    if (!detail.empty()) j["detail"] = detail;
    log_.push_back(j.dump());
}

std::vector<std::string> Tower::take_log()
{
    return std::exchange(log_, {});
}

void Tower::ingest(ByteSpan wire, std::uint64_t tick)
{
    now_ = tick;
    const auto r = WireRecord::decode(wire);
    if (r.level != cfg_.level) throw Error(Errc::Malformed, "record level does not match the tower");
    const auto ch = short_hex(r.channel);
    if (r.kind == WireKind::Register) {
        switch (r.level) {
        case 1: {
            const auto reg = L1Register::decode(r.payload);
            auto& rec = l1_[r.channel];
            rec.setup = r.channel;
            rec.tmpl = reg.tmpl;
            rec.shared = reg.shared;
            break;
        }
        case 2: l2_[r.channel].last_tick = tick; break;
        default: {
            ByteReader in(r.payload);
            auto& rec = l3_[r.channel];
            rec.tmpl = txgraph::PunishTemplate::deserialize(in);
            in.expect_done();
            break;
        }
        }
        log("register", ch);
        return;
    }
    switch (r.level) {
    case 1: {
        auto it = l1_.find(r.channel);
        if (it == l1_.end()) throw Error(Errc::UnknownChannel, ch);
        ByteReader in(r.payload);
        auto pair = SignedPair::decode(in);
        in.expect_done();
        if (cfg_.keep_history && it->second.pair) it->second.history.push_back(*it->second.pair);
        it->second.pair = pair;
        break;
    }
    case 2: {
        auto it = l2_.find(r.channel);
        if (it == l2_.end()) throw Error(Errc::UnknownChannel, ch);
        ByteReader in(r.payload);
        it->second.packet = crypto::CipherPacket::deserialize(in);
        in.expect_done();
        it->second.last_tick = tick;
        break;
    }
    default: {
        auto it = l3_.find(r.channel);
        if (it == l3_.end()) throw Error(Errc::UnknownChannel, ch);
        it->second.key = L3Update::decode(r.payload);
        break;
    }
    }
}

std::size_t Tower::record_size(const crypto::Hash256& channel) const
{
    constexpr std::size_t id = crypto::Hash256::size;
    if (auto it = l1_.find(channel); it != l1_.end())
        return id + it->second.tmpl.serialize().size() + 1 + (it->second.pair ? it->second.pair->encode().size() : 0);
    if (auto it = l2_.find(channel); it != l2_.end())
        return id + 8 + (it->second.packet ? it->second.packet->serialize().size() : 0);
    if (auto it = l3_.find(channel); it != l3_.end())
        return id + it->second.tmpl.serialize().size() + (it->second.key ? it->second.key->encode().size() : 0);
    throw Error(Errc::UnknownChannel, short_hex(channel));
}

void Tower::on_tick(std::uint64_t tick)
{
    now_ = tick;
    const auto& ids = chain_.accepted();
    for (; cursor_ < ids.size(); ++cursor_) {
        const auto id = ids[cursor_];
        if (const auto* tx = chain_.find(id)) scan(id, *tx);
    }
}

void Tower::scan(const Txid& id, const Transaction& tx)
{
    switch (cfg_.level) {
    case 1: scan_l1(id, tx); break;
    case 2: scan_l2(id, tx); break;
    default: scan_l3(id, tx); break;
    }
}

std::optional<std::pair<std::uint32_t, crypto::OTSignature>> Tower::assert_value(
    const Txid& id, const Transaction& tx, const Txid& commit, const crypto::OTPublicKey& victim) const
{
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i) {
        if (tx.inputs[i].prevout != Outpoint{commit, 0}) continue;
        const auto& w = chain_.observe_witness(id, i);
        if (w.leaf_index != 0) return std::nullopt;
        const auto sig = txgraph::scrape_ots(w, victim.params);
        if (!sig) return std::nullopt;
        const auto m = crypto::ots_recover_value(victim, *sig);
        if (!m) return std::nullopt;
        return std::pair{*m, *sig};
    }
    return std::nullopt;
}

txgraph::Anchor Tower::anchor_at(const Transaction& tx, const Outpoint& at) const
{
    const auto& out = tx.outputs.at(at.index);
    return {at, out.amount, out.lock};
}

bool Tower::broadcast(const std::string& channel, std::vector<Transaction> txs)
{
    const auto r = chain_.submit_package(txs);
    std::string names;
    for (const auto& t : txs) names += (names.empty() ? "" : "+") + t.name;
    if (!r.accepted()) {
        log("reject", channel, names + ": " + chain::reject_name(r.reason));
        return false;
    }
    for (const auto& t : txs) published_.push_back(t.txid());
    log("publish", channel, names);
    return true;
}

// ---- level 1 -------------------------------------------------------------

void Tower::scan_l1(const Txid& id, const Transaction& tx)
{
    for (auto& [q, rec] : l1_) {
        if (rec.done) continue;
        const auto ch = short_hex(q);
        const auto* setup = chain_.find(rec.setup);
        if (!setup) continue;
        const Role victim = rec.tmpl.victim;
        const auto dispute_index = rec.shared ? (victim == Role::Bob ? txgraph::kAliceDisputesOut
                                                                     : txgraph::kBobDisputesOut)
                                              : (victim == Role::Bob ? txgraph::kWtaDisputesOut
                                                                     : txgraph::kWtbDisputesOut);
        const auto pair_for = [&](const SignedPair& sp) {
            auto pair = txgraph::build_punish_pair(rec.tmpl, anchor_at(*setup, {rec.setup, dispute_index}),
                                                   anchor_at(*setup, {rec.setup, txgraph::kFundsOut}), sp.threshold);
            txgraph::fill_witnesses(pair.commit, {{0, sp.commit}}, {});
            return pair;
        };
        const bool spends_exit = std::any_of(tx.inputs.begin(), tx.inputs.end(), [&](const auto& in) {
            return in.prevout == Outpoint{rec.setup, txgraph::kUnilateralExitOut};
        });
        if (spends_exit && tx.kind != chain::TxKind::CooperativeClose) {
            rec.commit = id;
            log("exit-seen", ch);
            if (cfg_.collude) {
                const auto* oldest = !rec.history.empty() ? &rec.history.front() : rec.pair ? &*rec.pair : nullptr;
                if (oldest) broadcast(ch, {pair_for(*oldest).commit});
                rec.done = true;
            }
            continue;
        }
        if (!rec.commit || !rec.pair) continue;
        const auto v = assert_value(id, tx, *rec.commit, rec.tmpl.victim_key);
        if (!v) continue;
        rec.done = true;
        if (v->first >= rec.pair->threshold) {
            log("not-stale", ch, std::to_string(v->first));
            continue;
        }
        auto pair = pair_for(*rec.pair);
        script::SigningMaterial mat;
        mat.ots = v->second;
        txgraph::fill_witnesses(pair.punish, {{0, rec.pair->punish}}, mat);
        rebuilt_ = pair;
        broadcast(ch, {pair.commit, pair.punish});
    }
}

// ---- level 2 -------------------------------------------------------------

void Tower::scan_l2(const Txid& id, const Transaction& tx)
{
    for (auto& [q, rec] : l2_) {
        if (rec.done || !rec.packet) continue;
        const auto ch = short_hex(q);
        std::optional<L2Packet> pkt;
        for (std::uint32_t i = 0; i < tx.inputs.size() && !pkt; ++i) {
            for (const auto& item : chain_.observe_witness(id, i).stack) {
                if (item.size() != crypto::Hash256::size) continue;
                try {
                    pkt = L2Packet::decode(crypto::decrypt(item, *rec.packet));
                    break;
                } catch (const Error&) {
                }
            }
        }
        if (!pkt) continue;
        rec.done = true;
        const auto commit = tx.inputs[0].prevout.txid;
        const auto v = assert_value(id, tx, commit, pkt->tmpl.victim_key);
        if (!v || v->first >= pkt->pair.threshold) {
            log("not-stale", ch);
            continue;
        }
        txgraph::ChannelParams p;
        p.privacy_level = 2;
        p.keyset = pkt->tmpl.keyset;
        p.epsilon = pkt->epsilon;
        p.anchor_nonce = pkt->nonce;
        auto wtd = txgraph::build_wt_structures(p, pkt->setup);
        txgraph::fill_witnesses(wtd, {{0, pkt->anchor}}, {});
        const auto* setup = chain_.find(pkt->setup);
        if (!setup) continue;
        // WTDisputes outputs: 0 for Bob's tower, 1 for Alice's.
        const std::uint32_t out = pkt->tmpl.victim == Role::Bob ? 1 : 0;
        auto pair = txgraph::build_punish_pair(pkt->tmpl, anchor_at(wtd, wtd.outpoint(out)),
                                               anchor_at(*setup, {pkt->setup, txgraph::kFundsOut}),
                                               pkt->pair.threshold);
        txgraph::fill_witnesses(pair.commit, {{0, pkt->pair.commit}}, {});
        script::SigningMaterial mat;
        mat.ots = v->second;
        txgraph::fill_witnesses(pair.punish, {{0, pkt->pair.punish}}, mat);
        rebuilt_ = pair;
        std::vector<Transaction> txs;
        if (!chain_.known(wtd.txid())) txs.push_back(wtd);
        txs.push_back(pair.commit);
        txs.push_back(pair.punish);
        broadcast(ch, std::move(txs));
    }
}

// ---- level 3 -------------------------------------------------------------

void Tower::scan_l3(const Txid& id, const Transaction& tx)
{
    for (auto& [q, rec] : l3_) {
        if (rec.done) continue;
        const auto ch = short_hex(q);
        const bool commits = std::any_of(tx.inputs.begin(), tx.inputs.end(),
                                         [&](const auto& in) { return in.prevout == Outpoint{q, 0}; });
        if (commits) {
            const auto data = tx.op_returns();
            const auto payload = data.empty() ? std::nullopt : txgraph::CommitPayload::decode(data[0]);
            if (!payload) continue;
            const std::uint32_t j = payload->esn;
            if (!rec.key || j + 1 > rec.key->index) {
                log("stale-record", ch, "esn " + std::to_string(j));
                rec.done = true;
                continue;
            }
            const std::uint32_t steps = rec.key->index - (j + 1);
            const auto key = crypto::HashChain::walk_down(rec.key->key, steps);
            derivations_ = steps;
            L3Slot slot;
            try {
                slot = L3Slot::decode(crypto::decrypt(key.span(), payload->slot_of(cfg_.client)));
            } catch (const Error& e) {
                log("decrypt-failure", ch, e.what());
                rec.done = true;
                continue;
            }
            const auto* start = chain_.find(q);
            if (!start) continue;
            const Txid setup = start->inputs.at(0).prevout.txid;
            const auto* setup_tx = chain_.find(setup);
            if (!setup_tx) continue;
            const std::uint32_t out = cfg_.client == Role::Alice ? 2 : 1;
            auto pair = txgraph::build_punish_pair(rec.tmpl, anchor_at(*start, {q, out}),
                                                   anchor_at(*setup_tx, {setup, txgraph::kFundsOut}), j + 1);
            txgraph::fill_witnesses(pair.commit, {{0, slot.commit}}, {});
            rec.pair = pair;
            rec.slot = slot;
            rec.commit = id;
            rec.committed_esn = j;
            rebuilt_ = pair;
            log("decrypted", ch, "esn " + std::to_string(j) + " steps " + std::to_string(steps));
            continue;
        }
        if (!rec.commit || !rec.pair) continue;
        const auto v = assert_value(id, tx, *rec.commit, rec.tmpl.victim_key);
        if (!v) continue;
        rec.done = true;
        auto pair = *rec.pair;
        script::SigningMaterial mat;
        mat.ots = v->second;
        txgraph::fill_witnesses(pair.punish, {{0, rec.slot->punish}}, mat);
        rebuilt_ = pair;
        broadcast(ch, {pair.commit, pair.punish});
    }
}

}  // namespace otspc::watchtower
