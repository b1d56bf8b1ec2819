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

#include "otspc/chain/transaction.hpp"

namespace otspc::chain {

namespace {

void write_base(ByteWriter& w, const Transaction& tx, bool blank_anyprevout)
{
    w.u32(static_cast<std::uint32_t>(tx.inputs.size()));
    for (const auto& in : tx.inputs) {
        if (blank_anyprevout && in.anyprevout) {
            w.fixed(Txid{});
            w.u32(0);
        } else {
            w.fixed(in.prevout.txid);
            w.u32(in.prevout.index);
        }
        w.u8(in.anyprevout ? 1 : 0);
    }
    w.u32(static_cast<std::uint32_t>(tx.outputs.size()));
    for (const auto& out : tx.outputs) {
        w.i64(out.amount);
        if (out.op_return) {
            w.u8(0x6a);
            w.var(*out.op_return);
        } else {
            w.u8(0);
            w.raw(out.lock.serialize());
        }
    }
    w.u32(tx.locktime.value_or(0));
}

}  // namespace

std::string Outpoint::str() const
{
    return txid.hex() + ":" + std::to_string(index);
}

const char* tx_kind_name(TxKind k)
{
    switch (k) {
    case TxKind::Funding: return "Funding";
    case TxKind::Setup: return "Setup";
    case TxKind::WTDisputes: return "WTDisputes";
    case TxKind::StartExit: return "StartExit";
    case TxKind::CommitExit: return "CommitExit";
    case TxKind::AssertExitState: return "AssertExitState";
    case TxKind::FinalizeExit: return "FinalizeExit";
    case TxKind::ExpireAliceExit: return "ExpireAliceExit";
    case TxKind::ExpireBobExit: return "ExpireBobExit";
    case TxKind::CommitPunishAlice: return "CommitPunishAlice";
    case TxKind::CommitPunishBob: return "CommitPunishBob";
    case TxKind::PunishAlice: return "PunishAlice";
    case TxKind::PunishBob: return "PunishBob";
    case TxKind::WTACommitPunish: return "WTACommitPunish";
    case TxKind::WTBCommitPunish: return "WTBCommitPunish";
    case TxKind::WTAPunish: return "WTAPunish";
    case TxKind::WTBPunish: return "WTBPunish";
    case TxKind::CooperativeClose: return "CooperativeClose";
    case TxKind::HtlcClaim: return "HtlcClaim";
    case TxKind::HtlcRefund: return "HtlcRefund";
    case TxKind::Other: return "Other";
    }
    return "?";
}

TxOutput TxOutput::data(Bytes payload)
{
    TxOutput out;
    out.op_return = std::move(payload);
    return out;
}

Bytes Transaction::serialize_base() const
{
    ByteWriter w;
    write_base(w, *this, false);
    return std::move(w).bytes();
}

Bytes Transaction::serialize() const
{
    ByteWriter w;
    write_base(w, *this, false);
    for (const auto& in : inputs) w.var(in.witness.serialize());
    return std::move(w).bytes();
}

Txid Transaction::txid() const
{
    return crypto::sha256d(serialize_base());
}

crypto::Hash256 Transaction::sighash() const
{
    ByteWriter w;
    write_base(w, *this, true);
    return crypto::tagged_hash("otspc/sighash", w.bytes());
}

Amount Transaction::output_total() const
{
    Amount total = 0;
    for (const auto& o : outputs) total += o.amount;
    return total;
}

std::vector<Bytes> Transaction::op_returns() const
{
    std::vector<Bytes> out;
    for (const auto& o : outputs)
        if (o.op_return) out.push_back(*o.op_return);
    return out;
}

}  // namespace otspc::chain
