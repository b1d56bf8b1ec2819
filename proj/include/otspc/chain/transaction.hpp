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

#include "otspc/script/lock.hpp"

#include <optional>
#include <string>
#include <vector>

namespace otspc::chain {

using Txid = crypto::Hash256;

struct Outpoint {
    Txid txid;
    std::uint32_t index = 0;

    std::string str() const;
    friend auto operator<=>(const Outpoint&, const Outpoint&) = default;
};

enum class TxKind : std::uint8_t {
    Funding,
    Setup,
    WTDisputes,
    StartExit,
    CommitExit,
    AssertExitState,
    FinalizeExit,
    ExpireAliceExit,
    ExpireBobExit,
    CommitPunishAlice,
    CommitPunishBob,
    PunishAlice,
    PunishBob,
    WTACommitPunish,
    WTBCommitPunish,
    WTAPunish,
    WTBPunish,
    CooperativeClose,
    HtlcClaim,
    HtlcRefund,
    Other,
};

const char* tx_kind_name(TxKind k);

struct TxInput {
    Outpoint prevout;
    /// The prevout is left out of the signature digest, so one signature
    /// covers every output that shares the script.
    bool anyprevout = false;
    script::Witness witness;
    /// Builder metadata, not part of the serialization: how the spent
    /// output is locked and which witness items the chosen path needs.
    script::PathDescriptor path;
    script::OutputLock spent_lock;
};

struct TxOutput {
    Amount amount = 0;
    script::OutputLock lock;
    /// Data carrier output: zero amount and never spendable.
    std::optional<Bytes> op_return;

    static TxOutput data(Bytes payload);
    bool spendable() const { return !op_return.has_value(); }
};

struct Transaction {
    std::string name;
    TxKind kind = TxKind::Other;
    std::vector<TxInput> inputs;
    std::vector<TxOutput> outputs;
    std::optional<std::uint32_t> locktime;

    /// Witnesses and metadata excluded.
    Bytes serialize_base() const;
    /// Full wire form including witnesses.
    Bytes serialize() const;
    Txid txid() const;
    /// Digest covered by covenant and single signatures.
    crypto::Hash256 sighash() const;

    Amount output_total() const;
    std::vector<Bytes> op_returns() const;
    Outpoint outpoint(std::uint32_t index) const { return {txid(), index}; }
};

}  // namespace otspc::chain
