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

#include "otspc/htlc/htlc.hpp"

#include "otspc/txgraph/params.hpp"

#include <algorithm>

namespace otspc::htlc {

using namespace script;

Script claim_leaf(const Htlc& h, const HtlcKeys& keys)
{
    return {op::CSigV{keys.of(h.receiver())}, op::CBeforeV{h.expiry}, op::CHashV{h.payment_hash}};
}

Script refund_leaf(const Htlc& h, const HtlcKeys& keys)
{
    return {op::CSigV{keys.of(h.sender)}, op::CLockV{h.expiry}};
}

OutputLock htlc_lock(const Htlc& h, const HtlcKeys& keys)
{
    return OutputLock::tap_tree({claim_leaf(h, keys), refund_leaf(h, keys)});
}

namespace {

chain::Transaction spend(const Htlc& h, const HtlcKeys& keys, const chain::Outpoint& at, const OutputLock& to,
                         bool claim)
{
    chain::Transaction tx;
    tx.name = std::string(claim ? "HtlcClaim(" : "HtlcRefund(") + std::to_string(h.id) + ")";
    tx.kind = claim ? chain::TxKind::HtlcClaim : chain::TxKind::HtlcRefund;
    chain::TxInput in;
    in.prevout = at;
    in.spent_lock = htlc_lock(h, keys);
    in.path = claim ? PathDescriptor{0, std::nullopt, {Slot::PaymentPreimage, Slot::SingleSig}}
                    : PathDescriptor{1, std::nullopt, {Slot::SingleSig}};
    tx.inputs.push_back(std::move(in));
    tx.outputs.push_back({h.amount, to, std::nullopt});
    return tx;
}

std::vector<Htlc>::const_iterator find_htlc(const txgraph::StateSnapshot& s, std::uint32_t id)
{
    auto it = std::find_if(s.htlcs.begin(), s.htlcs.end(), [&](const Htlc& h) { return h.id == id; });
    if (it == s.htlcs.end()) throw Error(Errc::UnknownHtlc, "no open HTLC with id " + std::to_string(id));
    return it;
}

}  // namespace

chain::Transaction build_claim(const Htlc& h, const HtlcKeys& keys, const chain::Outpoint& at,
                               const OutputLock& to)
{
    return spend(h, keys, at, to, true);
}

chain::Transaction build_refund(const Htlc& h, const HtlcKeys& keys, const chain::Outpoint& at,
                                const OutputLock& to)
{
    return spend(h, keys, at, to, false);
}

void sign_claim(chain::Transaction& tx, const crypto::SigningKey& receiver, const crypto::Preimage& preimage)
{
    SigningMaterial m;
    m.single = crypto::single_sign(receiver, tx.sighash());
    m.payment = preimage;
    auto& in = tx.inputs.at(0);
    in.witness = build_witness_for(in.spent_lock, in.path, m);
}

void sign_refund(chain::Transaction& tx, const crypto::SigningKey& sender)
{
    SigningMaterial m;
    m.single = crypto::single_sign(sender, tx.sighash());
    auto& in = tx.inputs.at(0);
    in.witness = build_witness_for(in.spent_lock, in.path, m);
}

txgraph::StateSnapshot add_htlc(const txgraph::StateSnapshot& state, const Htlc& h)
{
    if (h.amount <= 0) throw Error(Errc::InvalidParams, "HTLC amount must be positive");
    for (const auto& open : state.htlcs)
        if (open.id == h.id) throw Error(Errc::InvalidParams, "duplicate HTLC id");
    auto next = state;
    if (next.balance_of(h.sender) < h.amount)
        throw Error(Errc::InsufficientBalance, std::string(role_name(h.sender)) + " cannot fund HTLC");
    next.balance_of(h.sender) -= h.amount;
    next.htlcs.push_back(h);
    return next;
}

txgraph::StateSnapshot settle_htlc(const txgraph::StateSnapshot& state, std::uint32_t id,
                                   const crypto::Preimage& preimage)
{
    auto it = find_htlc(state, id);
    if (crypto::commit(preimage) != it->payment_hash) throw Error(Errc::WrongPreimage, "preimage does not match");
    auto next = state;
    next.balance_of(it->receiver()) += it->amount;
    next.htlcs.erase(next.htlcs.begin() + (it - state.htlcs.begin()));
    return next;
}

txgraph::StateSnapshot fail_htlc(const txgraph::StateSnapshot& state, std::uint32_t id)
{
    auto it = find_htlc(state, id);
    auto next = state;
    next.balance_of(it->sender) += it->amount;
    next.htlcs.erase(next.htlcs.begin() + (it - state.htlcs.begin()));
    return next;
}

}  // namespace otspc::htlc
