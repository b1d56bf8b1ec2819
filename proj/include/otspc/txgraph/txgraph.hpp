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

#include "otspc/crypto/cipher.hpp"
#include "otspc/txgraph/params.hpp"

#include <map>

namespace otspc::txgraph {

// Setup output positions. Level 2 puts one tower anchor at 4; level 3 has
// no tower outputs on Setup (they hang off StartExit).
inline constexpr std::uint32_t kFundsOut = 0;
inline constexpr std::uint32_t kUnilateralExitOut = 1;
inline constexpr std::uint32_t kBobDisputesOut = 2;
inline constexpr std::uint32_t kAliceDisputesOut = 3;
inline constexpr std::uint32_t kWtbDisputesOut = 4;
inline constexpr std::uint32_t kWtaDisputesOut = 5;
inline constexpr std::uint32_t kWtAnchorOut = 4;

// ---- scripts -------------------------------------------------------------

script::OutputLock cov_address(const crypto::CovenantKeySet& keyset);
script::Script unilateral_exit_script(const ChannelParams& p);
/// Leaves: assert (path 1), expire Alice (path 2), expire Bob (path 3).
script::OutputLock commit_exit_lock(const ChannelParams& p, std::uint32_t esn);
/// Leaves: finalize after T (path 1), fast finalize with both preimages (path 2).
script::OutputLock ready_lock(const ChannelParams& p);
script::OutputLock punish_lock(const crypto::CovenantKeySet& keyset, const crypto::OTPublicKey& victim,
                               std::uint32_t threshold);

// ---- setup and fixed anchors --------------------------------------------

struct FundingSource {
    chain::Outpoint outpoint;
    Amount amount = 0;
    script::OutputLock lock;
    Amount deposit = 0;
    script::OutputLock change;
};

/// Alice pays half of the connector outputs, Bob the rest. Throws
/// InsufficientFunding.
chain::Transaction build_setup(const ChannelParams& p, const FundingSource& alice, const FundingSource& bob);

struct Anchor {
    chain::Outpoint at;
    Amount amount = 0;
    script::OutputLock lock;
};

/// WTDisputes at level 2, StartExit at level 3. Throws WrongLevel below 2.
chain::Transaction build_wt_structures(const ChannelParams& p, const chain::Transaction& setup);
/// Same, from the Setup txid alone. Uses keyset, epsilon and nonce from `p`.
chain::Transaction build_wt_structures(const ChannelParams& p, const chain::Txid& setup_txid);

struct ChannelAnchors {
    chain::Txid setup_txid;
    Anchor funds;
    /// What CommitExit spends: Unilateral_Exit_out, or StartExit_out at level 3.
    Anchor exit;
    Anchor bob_disputes;
    Anchor alice_disputes;
    std::optional<Anchor> wta_disputes;
    std::optional<Anchor> wtb_disputes;
    /// WTDisputes or StartExit, unsigned.
    std::optional<chain::Transaction> wt_anchor_tx;
    /// Setup outputs a cooperative close sweeps besides Funds.
    std::vector<Anchor> connectors;

    /// The output the beneficiary spends to punish `victim`.
    const Anchor& disputes_against(Role victim) const
    {
        return victim == Role::Alice ? bob_disputes : alice_disputes;
    }
    const std::optional<Anchor>& tower_disputes(Role client) const
    {
        return client == Role::Alice ? wta_disputes : wtb_disputes;
    }
    /// q: Setup txid at level 1, otherwise the anchor transaction's txid.
    chain::Txid tower_channel_id() const;
};

ChannelAnchors derive_anchors(const ChannelParams& p, const chain::Transaction& setup);

// ---- per-state templates -------------------------------------------------

struct ExitSet {
    chain::Transaction commit_exit;
    chain::Transaction assert_exit;
    chain::Transaction finalize_exit;
    chain::Transaction expire_alice;
    chain::Transaction expire_bob;

    const chain::Transaction& expire_of(Role staller) const
    {
        return staller == Role::Alice ? expire_alice : expire_bob;
    }
};

/// A non-empty commit_payload becomes an OP_RETURN on CommitExit.
ExitSet build_exit_set(const ChannelParams& p, const ChannelAnchors& a, const StateSnapshot& s,
                       const Bytes& commit_payload = {});

struct PunishPair {
    chain::Transaction commit;
    chain::Transaction punish;
};

/// Everything needed to rebuild a punish pair; level-3 towers receive it once.
struct PunishTemplate {
    crypto::CovenantKeySet keyset;
    crypto::OTPublicKey victim_key;
    Role victim = Role::Alice;
    script::OutputLock beneficiary;
    std::optional<script::OutputLock> tower;
    Amount reward = 0;

    Bytes serialize() const;
    static PunishTemplate deserialize(ByteReader& in);
};

PunishTemplate punish_template(const ChannelParams& p, Role victim, bool for_tower);

/// CommitPunish moves the dispute output into a lock that wants an OT
/// signature by the victim on a value below the threshold; Punish sweeps
/// Funds with it.
PunishPair build_punish_pair(const PunishTemplate& t, const Anchor& dispute, const Anchor& funds,
                             std::uint32_t threshold);

struct PunishSet {
    PunishPair against_alice;
    PunishPair against_bob;
    /// Tower variants, keyed by client: wta is Alice's tower punishing Bob.
    std::optional<PunishPair> wta;
    std::optional<PunishPair> wtb;

    const PunishPair& against(Role victim) const { return victim == Role::Alice ? against_alice : against_bob; }
    const std::optional<PunishPair>& tower_of(Role client) const { return client == Role::Alice ? wta : wtb; }
};

/// Throws StateZero for isn 0.
PunishSet build_punish_set(const ChannelParams& p, const ChannelAnchors& a, const StateSnapshot& s);
/// esn for owners and level 1-2 towers; esn + 1 for level-3 towers, whose
/// key index runs one ahead.
std::uint32_t tower_threshold(const ChannelParams& p, const StateSnapshot& s);

/// Proportional split of the connector sweep and the close fee; open HTLCs
/// go back to their senders.
chain::Transaction build_cooperative_close(const ChannelParams& p, const ChannelAnchors& a, const StateSnapshot& s,
                                           Amount fee);

// ---- witnesses -----------------------------------------------------------

using SigSet = std::map<std::uint8_t, crypto::CovenantSignature>;

/// Covenant paths both owners sign for `tx`.
std::vector<std::uint8_t> required_paths(const chain::Transaction& tx);

/// Fills inputs from their path descriptors. Throws MissingItem.
void fill_witnesses(chain::Transaction& tx, const SigSet& sigs, const script::SigningMaterial& material);
void fill_input(chain::Transaction& tx, std::uint32_t input, const SigSet& sigs,
                const script::SigningMaterial& material);

void select_exit_branch(chain::Transaction& tx, std::uint32_t input, Role who);
void select_assert_branch(chain::Transaction& tx, Role who, int privacy_level);
void select_fast_finalize(chain::Transaction& tx);
/// Points an anyprevout Expire input at a concrete CommitExit output.
void retarget_expire(chain::Transaction& tx, const chain::Outpoint& commit_out, const script::OutputLock& lock);

std::optional<crypto::OTSignature> scrape_ots(const script::Witness& w, const crypto::OTParams& params);
std::optional<crypto::Preimage> scrape_preimage(const script::Witness& w, const crypto::Hash160& digest);

// ---- level-3 commit payload ----------------------------------------------

/// Two aggregated signatures: tower CommitPunish and tower Punish.
inline constexpr std::size_t kTowerPayloadSize = 2 * crypto::CovenantSignature::kSize;
inline constexpr std::size_t kTowerSlotSize = 12 + kTowerPayloadSize + 16;

struct CommitPayload {
    std::uint32_t esn = 0;
    crypto::CipherPacket for_alice_tower;
    crypto::CipherPacket for_bob_tower;

    const crypto::CipherPacket& slot_of(Role client) const
    {
        return client == Role::Alice ? for_alice_tower : for_bob_tower;
    }
    Bytes encode() const;
    static std::optional<CommitPayload> decode(ByteSpan data);
};

// ---- weights -------------------------------------------------------------

namespace weights {
inline constexpr std::uint32_t kPreimage = 21;
inline constexpr std::uint32_t kAggregateInput = 272;
inline constexpr std::uint32_t kOutput = 124;
inline constexpr std::uint32_t kSignedSequence = 800;
inline constexpr std::uint32_t kFinalize = 792;
}  // namespace weights

struct WeightReport {
    std::string tx;
    std::vector<std::pair<std::string, std::uint32_t>> parts;
    std::uint32_t total = 0;
};

/// Reference-constant estimate, not consensus weight.
WeightReport estimate_weight(const chain::Transaction& tx);
/// CommitExit, AssertExitState and FinalizeExit of a plain two-output state.
std::vector<WeightReport> exit_path_weights();

}  // namespace otspc::txgraph
