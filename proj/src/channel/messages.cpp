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

#include "otspc/channel/messages.hpp"

#include <algorithm>

namespace otspc::channel {

const char* template_name(TemplateId id)
{
    switch (id) {
    case TemplateId::WtAnchor: return "WtAnchor";
    case TemplateId::CommitExit: return "CommitExit";
    case TemplateId::AssertExit: return "AssertExitState";
    case TemplateId::FinalizeExit: return "FinalizeExit";
    case TemplateId::ExpireAlice: return "ExpireAliceExit";
    case TemplateId::ExpireBob: return "ExpireBobExit";
    case TemplateId::CommitPunishAlice: return "CommitPunishAlice";
    case TemplateId::PunishAlice: return "PunishAlice";
    case TemplateId::CommitPunishBob: return "CommitPunishBob";
    case TemplateId::PunishBob: return "PunishBob";
    case TemplateId::WtaCommitPunish: return "WTA-CommitPunishBob";
    case TemplateId::WtaPunish: return "WTA-PunishBob";
    case TemplateId::WtbCommitPunish: return "WTB-CommitPunishAlice";
    case TemplateId::WtbPunish: return "WTB-PunishAlice";
    case TemplateId::CooperativeClose: return "CooperativeClose";
    }
    return "?";
}

const char* msg_kind_name(MsgKind k)
{
    switch (k) {
    case MsgKind::Hello: return "Hello";
    case MsgKind::SlotRequest: return "SlotRequest";
    case MsgKind::SlotOffer: return "SlotOffer";
    case MsgKind::SlotReply: return "SlotReply";
    case MsgKind::Propose: return "Propose";
    case MsgKind::Sigs: return "Sigs";
    case MsgKind::KeyReveal: return "KeyReveal";
    case MsgKind::CloseRequest: return "CloseRequest";
    case MsgKind::CloseSigs: return "CloseSigs";
    case MsgKind::Abort: return "Abort";
    }
    return "?";
}

namespace {

const htlc::Htlc& find_htlc(const txgraph::StateSnapshot& s, std::uint32_t id)
{
    auto it = std::find_if(s.htlcs.begin(), s.htlcs.end(), [&](const htlc::Htlc& h) { return h.id == id; });
    if (it == s.htlcs.end()) throw Error(Errc::UnknownHtlc, "no HTLC " + std::to_string(id));
    return *it;
}

}  // namespace

txgraph::StateSnapshot UpdateOp::apply(const txgraph::StateSnapshot& s, std::uint32_t esn) const
{
    txgraph::StateSnapshot next;
    switch (kind) {
    case UpdateKind::Pay:
        if (amount <= 0) throw Error(Errc::InvalidParams, "payment must be positive");
        if (s.balance_of(from) < amount) throw Error(Errc::InsufficientBalance, "payer balance too low");
        next = s;
        next.balance_of(from) -= amount;
        next.balance_of(other(from)) += amount;
        break;
    case UpdateKind::AddHtlc:
        next = htlc::add_htlc(s, htlc);
        break;
    case UpdateKind::SettleHtlc:
        if (!preimage) throw Error(Errc::WrongPreimage, "settle needs the preimage");
        next = htlc::settle_htlc(s, htlc_id, *preimage);
        break;
    case UpdateKind::FailHtlc:
        next = htlc::fail_htlc(s, htlc_id);
        break;
    }
    next.isn = s.isn + 1;
    next.esn = esn;
    return next;
}

Role UpdateOp::payer(const txgraph::StateSnapshot& s) const
{
    switch (kind) {
    case UpdateKind::Pay: return from;
    case UpdateKind::AddHtlc: return htlc.sender;
    case UpdateKind::SettleHtlc: return find_htlc(s, htlc_id).sender;
    case UpdateKind::FailHtlc: return find_htlc(s, htlc_id).receiver();
    }
    return from;
}

std::string UpdateOp::describe() const
{
    switch (kind) {
    case UpdateKind::Pay: return std::string("pay ") + role_name(from) + " " + std::to_string(amount);
    case UpdateKind::AddHtlc:
        return "add_htlc " + std::to_string(htlc.id) + " " + role_name(htlc.sender) + " " + std::to_string(htlc.amount);
    case UpdateKind::SettleHtlc: return "settle_htlc " + std::to_string(htlc_id);
    case UpdateKind::FailHtlc: return "fail_htlc " + std::to_string(htlc_id);
    }
    return "?";
}

}  // namespace otspc::channel
