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

#include "otspc/chain/transaction.hpp"
#include "otspc/role.hpp"

#include <vector>

namespace otspc::txgraph {
struct StateSnapshot;
}

namespace otspc::htlc {

struct Htlc {
    std::uint32_t id = 0;
    /// The party whose balance funds the HTLC.
    Role sender = Role::Alice;
    Amount amount = 0;
    crypto::Hash160 payment_hash;
    /// Absolute height: claimable below it, refundable at or above it.
    std::uint32_t expiry = 0;

    Role receiver() const { return other(sender); }
    friend bool operator==(const Htlc&, const Htlc&) = default;
};

struct HtlcKeys {
    crypto::KeyId alice;
    crypto::KeyId bob;
    const crypto::KeyId& of(Role r) const { return r == Role::Alice ? alice : bob; }
};

/// Leaf 0: receiver with preimage before expiry. Leaf 1: sender from expiry on.
script::Script claim_leaf(const Htlc& h, const HtlcKeys& keys);
script::Script refund_leaf(const Htlc& h, const HtlcKeys& keys);
script::OutputLock htlc_lock(const Htlc& h, const HtlcKeys& keys);

/// Unsigned spends of an on-chain HTLC output.
chain::Transaction build_claim(const Htlc& h, const HtlcKeys& keys, const chain::Outpoint& at,
                               const script::OutputLock& to);
chain::Transaction build_refund(const Htlc& h, const HtlcKeys& keys, const chain::Outpoint& at,
                                const script::OutputLock& to);
/// Attaches the single signature (and preimage for claims).
void sign_claim(chain::Transaction& tx, const crypto::SigningKey& receiver, const crypto::Preimage& preimage);
void sign_refund(chain::Transaction& tx, const crypto::SigningKey& sender);

/// Balance moves for the next state; isn/esn are left to the caller.
/// Throws InsufficientBalance.
txgraph::StateSnapshot add_htlc(const txgraph::StateSnapshot& state, const Htlc& h);
/// Throws UnknownHtlc or WrongPreimage.
txgraph::StateSnapshot settle_htlc(const txgraph::StateSnapshot& state, std::uint32_t id,
                                   const crypto::Preimage& preimage);
txgraph::StateSnapshot fail_htlc(const txgraph::StateSnapshot& state, std::uint32_t id);

}  // namespace otspc::htlc
