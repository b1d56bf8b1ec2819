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

#include "otspc/crypto/ots.hpp"
#include "otspc/htlc/htlc.hpp"

namespace otspc::txgraph {

/// Parameters fixed at setup and known to both owners.
struct ChannelParams {
    Amount i_bal = 0;
    Amount epsilon = 0;
    /// Dispute window and stall timeout, in blocks.
    std::uint32_t T = 6;

    crypto::CovenantKeySet keyset;
    script::OutputLock alice_address;
    script::OutputLock bob_address;
    script::OutputLock shared_address;
    /// Keys behind the payout addresses; HTLC leaves check them.
    htlc::HtlcKeys payout;

    crypto::Hash160 h_a;
    crypto::Hash160 h_b;
    crypto::Hash160 h_e;
    crypto::OTPublicKey k_a;
    crypto::OTPublicKey k_b;

    int privacy_level = 1;
    /// Towers get dispute outputs of their own instead of reusing the
    /// owners' CommitPunish paths.
    bool separate_wt_outputs = true;
    script::OutputLock wta_address;
    script::OutputLock wtb_address;
    Amount tower_reward = 0;
    /// Secret nonce that makes the level-2/3 anchor txid unpredictable.
    Bytes anchor_nonce;
    Amount fee_commitment = 0;

    /// Throws InvalidParams.
    void validate() const;

    const script::OutputLock& address_of(Role r) const { return r == Role::Alice ? alice_address : bob_address; }
    const script::OutputLock& tower_address_of(Role client) const
    {
        return client == Role::Alice ? wta_address : wtb_address;
    }
    const crypto::OTPublicKey& ots_key_of(Role r) const { return r == Role::Alice ? k_a : k_b; }
    const crypto::Hash160& timeout_hash_of(Role r) const { return r == Role::Alice ? h_a : h_b; }
    bool has_wt_outputs() const { return privacy_level >= 2 || separate_wt_outputs; }
    /// Total of all connector outputs funded at setup.
    Amount connector_total() const;
};

struct StateSnapshot {
    std::uint32_t isn = 0;
    std::uint32_t esn = 0;
    Amount a_bal = 0;
    Amount b_bal = 0;
    std::vector<htlc::Htlc> htlcs;

    Amount balance_of(Role r) const { return r == Role::Alice ? a_bal : b_bal; }
    Amount& balance_of(Role r) { return r == Role::Alice ? a_bal : b_bal; }
    Amount htlc_total() const;
    /// a_bal + b_bal + htlcs + fee commitment = i_bal, all non-negative.
    bool conserves(const ChannelParams& p) const;

    friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

}  // namespace otspc::txgraph
