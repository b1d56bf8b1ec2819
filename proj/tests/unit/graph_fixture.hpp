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

#pragma once

// Two owners, their keys and an opened Setup on a fresh chain.

#include "otspc/chain/chain.hpp"
#include "otspc/txgraph/txgraph.hpp"

namespace otspc::testing {

inline crypto::SigningKey make_key(std::string_view label)
{
    return crypto::SigningKey(crypto::sha256(as_bytes(label)));
}

inline crypto::Preimage make_preimage(std::string_view label)
{
    return crypto::Preimage::from_span(crypto::sha256(as_bytes(label)).span());
}

inline script::OutputLock address_of(const crypto::SigningKey& key)
{
    return script::OutputLock::script_hash({script::op::CSigV{key.id()}});
}

struct GraphFixture {
    crypto::SignerRegistry registry;
    chain::Chain chain{&registry};
    crypto::SigningKey cov_a = make_key("cov-a");
    crypto::SigningKey cov_b = make_key("cov-b");
    crypto::SigningKey pay_a = make_key("pay-a");
    crypto::SigningKey pay_b = make_key("pay-b");
    crypto::SigningKey fund_a = make_key("fund-a");
    crypto::SigningKey fund_b = make_key("fund-b");
    crypto::SigningKey shared = make_key("shared");
    crypto::SigningKey tower_a = make_key("tower-a");
    crypto::SigningKey tower_b = make_key("tower-b");
    crypto::Preimage p_a = make_preimage("P_a");
    crypto::Preimage p_b = make_preimage("P_b");
    crypto::Preimage p_e = make_preimage("P_e");
    crypto::OTParams ot{};
    crypto::OTKeyPair k_a = crypto::OTKeyPair::generate(ot, crypto::sha256(as_bytes("ots-a")));
    crypto::OTKeyPair k_b = crypto::OTKeyPair::generate(ot, crypto::sha256(as_bytes("ots-b")));
    txgraph::ChannelParams params;
    chain::Transaction setup;
    txgraph::ChannelAnchors anchors;

    explicit GraphFixture(int level = 1, bool separate = true, Amount i_bal = 100000, Amount epsilon = 1000)
    {
        for (const auto* k : {&cov_a, &cov_b, &pay_a, &pay_b, &fund_a, &fund_b, &shared, &tower_a, &tower_b})
            registry.enroll(*k);
        params.i_bal = i_bal;
        params.epsilon = epsilon;
        params.T = 6;
        params.keyset = {cov_a.id(), cov_b.id()};
        params.alice_address = address_of(pay_a);
        params.bob_address = address_of(pay_b);
        params.shared_address = address_of(shared);
        params.payout = {pay_a.id(), pay_b.id()};
        params.h_a = crypto::commit(p_a);
        params.h_b = crypto::commit(p_b);
        params.h_e = crypto::commit(p_e);
        params.k_a = k_a.public_key();
        params.k_b = k_b.public_key();
        params.privacy_level = level;
        params.separate_wt_outputs = separate;
        params.wta_address = address_of(tower_a);
        params.wtb_address = address_of(tower_b);
        params.tower_reward = epsilon / 2;
        params.anchor_nonce = level >= 2 ? Bytes{1, 2, 3, 4, 5, 6, 7, 8} : Bytes{};
    }

    txgraph::FundingSource funding(Role who, Amount amount)
    {
        const auto& key = who == Role::Alice ? fund_a : fund_b;
        txgraph::FundingSource src;
        src.lock = address_of(key);
        src.amount = amount;
        src.outpoint = chain.mint(amount, src.lock, std::string("fund-") + role_name(who));
        src.deposit = params.i_bal / 2;
        if (who == Role::Bob) src.deposit = params.i_bal - params.i_bal / 2;
        src.change = src.lock;
        return src;
    }

    /// Funds both sides with `extra` over their share and confirms Setup.
    void open(Amount extra = 0)
    {
        const Amount c = params.connector_total();
        auto fa = funding(Role::Alice, params.i_bal / 2 + c / 2 + extra);
        auto fb = funding(Role::Bob, params.i_bal - params.i_bal / 2 + (c - c / 2) + extra);
        setup = txgraph::build_setup(params, fa, fb);
        sign_setup(setup);
        auto r = chain.submit(setup);
        if (!r.accepted()) throw std::runtime_error("setup rejected: " + r.describe());
        chain.mine_blocks(1);
        anchors = txgraph::derive_anchors(params, setup);
    }

    void sign_setup(chain::Transaction& tx)
    {
        const auto digest = tx.sighash();
        script::SigningMaterial ma, mb;
        ma.single = crypto::single_sign(fund_a, digest);
        mb.single = crypto::single_sign(fund_b, digest);
        txgraph::fill_input(tx, 0, {}, ma);
        txgraph::fill_input(tx, 1, {}, mb);
    }

    /// Both owners sign every covenant path of `tx`.
    txgraph::SigSet cosign(const chain::Transaction& tx) const
    {
        txgraph::SigSet sigs;
        const auto digest = tx.sighash();
        for (auto path : txgraph::required_paths(tx)) {
            sigs[path] = crypto::covenant_aggregate(params.keyset,
                                                    crypto::covenant_partial_sign(cov_a, params.keyset, digest, path),
                                                    crypto::covenant_partial_sign(cov_b, params.keyset, digest, path));
        }
        return sigs;
    }

    script::SigningMaterial preimages() const
    {
        script::SigningMaterial m;
        m.preimage_a = p_a;
        m.preimage_b = p_b;
        m.preimage_e = p_e;
        return m;
    }

    chain::SubmitResult publish(chain::Transaction& tx, script::SigningMaterial m)
    {
        txgraph::fill_witnesses(tx, cosign(tx), m);
        return chain.submit(tx);
    }

    chain::SubmitResult publish(chain::Transaction& tx) { return publish(tx, preimages()); }

    txgraph::StateSnapshot state(std::uint32_t isn, std::uint32_t esn, Amount a, Amount b) const
    {
        txgraph::StateSnapshot s;
        s.isn = isn;
        s.esn = esn;
        s.a_bal = a;
        s.b_bal = b;
        return s;
    }

    Amount balance(const crypto::SigningKey& key) const { return chain.balance_of(address_of(key)); }
};

}  // namespace otspc::testing
