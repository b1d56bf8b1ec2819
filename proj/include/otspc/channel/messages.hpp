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

#include "otspc/txgraph/txgraph.hpp"

#include <string>

namespace otspc::channel {

/// Names a template both parties can rebuild from shared parameters.
enum class TemplateId : std::uint8_t {
    WtAnchor,
    CommitExit,
    AssertExit,
    FinalizeExit,
    ExpireAlice,
    ExpireBob,
    CommitPunishAlice,
    PunishAlice,
    CommitPunishBob,
    PunishBob,
    WtaCommitPunish,
    WtaPunish,
    WtbCommitPunish,
    WtbPunish,
    CooperativeClose,
};

const char* template_name(TemplateId id);

struct NamedPartial {
    TemplateId id = TemplateId::CommitExit;
    crypto::PartialSignature sig;
};

enum class UpdateKind : std::uint8_t { Pay, AddHtlc, SettleHtlc, FailHtlc };

struct UpdateOp {
    UpdateKind kind = UpdateKind::Pay;
    /// Pay: the payer. Htlc ops: ignored, the HTLC says who is who.
    Role from = Role::Alice;
    Amount amount = 0;
    htlc::Htlc htlc;
    std::uint32_t htlc_id = 0;
    std::optional<crypto::Preimage> preimage;

    /// Next snapshot with isn + 1 and the given esn. Throws on invalid ops.
    txgraph::StateSnapshot apply(const txgraph::StateSnapshot& s, std::uint32_t esn) const;
    /// The party whose claim on the channel shrinks: it signs first.
    Role payer(const txgraph::StateSnapshot& s) const;
    std::string describe() const;
};

/// What a party tells the other during the handshake.
struct PeerInfo {
    crypto::KeyId covenant;
    crypto::KeyId payout;
    crypto::KeyId funding_key;
    crypto::OTPublicKey ots;
    crypto::Hash160 timeout_hash;
    txgraph::FundingSource funding;
    script::OutputLock address;
    /// Where this party's tower is paid; its own address if it has none.
    script::OutputLock tower_address;
    bool has_tower = false;
    // Sent by Alice only.
    std::optional<crypto::Preimage> p_e;
    Bytes anchor_nonce;
    crypto::Hash256 esn_seed;
};

enum class MsgKind : std::uint8_t {
    Hello,
    SlotRequest,
    SlotOffer,
    SlotReply,
    Propose,
    Sigs,
    KeyReveal,
    CloseRequest,
    CloseSigs,
    Abort,
};

const char* msg_kind_name(MsgKind k);

struct Message {
    MsgKind kind = MsgKind::Hello;
    Role from = Role::Alice;
    /// Zero until Setup is known.
    crypto::Hash256 channel;
    std::uint32_t isn = 0;
    std::uint8_t step = 0;

    std::optional<PeerInfo> hello;
    std::optional<UpdateOp> update;
    std::vector<NamedPartial> partials;
    std::optional<crypto::SingleSignature> funding_sig;
    std::optional<crypto::CipherPacket> slot;
    std::uint32_t key_index = 0;
    crypto::Hash256 key;
    Amount fee = 0;
    std::string reason;
};

}  // namespace otspc::channel
