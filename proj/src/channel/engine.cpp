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

#include "otspc/channel/engine.hpp"

#include "otspc/watchtower/wire.hpp"

#include <json.hpp>

#include <algorithm>

namespace otspc::channel {

using chain::Outpoint;
using chain::Transaction;
using chain::Txid;
using chain::TxKind;
using txgraph::SigSet;
using json = nlohmann::ordered_json;

void ChannelConfig::validate() const
{
    if (i_bal <= 0) throw Error(Errc::InvalidParams, "i_bal must be positive");
    if (epsilon <= 0) throw Error(Errc::InvalidParams, "epsilon must be positive");
    if (T == 0) throw Error(Errc::InvalidParams, "T must be at least one block");
    if (privacy_level < 1 || privacy_level > 3) throw Error(Errc::InvalidParams, "privacy level must be 1, 2 or 3");
    ot.validate();
    if (max_gap == 0) throw Error(Errc::InvalidParams, "max_gap must be at least 1");
    if (step_timeout == 0) throw Error(Errc::InvalidParams, "step_timeout must be at least one tick");
    if (tower_interval == 0) throw Error(Errc::InvalidParams, "tower_interval must be at least one tick");
    if (close_fee < 0) throw Error(Errc::InvalidParams, "close_fee must not be negative");
    if (privacy_level == 3 && (key_chain_length == 0 || key_chain_length > crypto::HashChain::kMaxLength))
        throw Error(Errc::InvalidParams, "key chain length out of range");
}

const char* adversary_action_name(AdversaryAction a)
{
    switch (a) {
    case AdversaryAction::Idle: return "idle";
    case AdversaryAction::ExitOld: return "exit_old";
    case AdversaryAction::ExitNew: return "exit_new";
    case AdversaryAction::CommitOnlyOld: return "commit_only_old";
    case AdversaryAction::CommitOnlyNew: return "commit_only_new";
    }
    return "?";
}

std::optional<AdversaryAction> parse_adversary_action(std::string_view name)
{
    for (auto a : {AdversaryAction::Idle, AdversaryAction::ExitOld, AdversaryAction::ExitNew,
                   AdversaryAction::CommitOnlyOld, AdversaryAction::CommitOnlyNew})
        if (name == adversary_action_name(a)) return a;
    return std::nullopt;
}

const char* phase_name(Phase p)
{
    switch (p) {
    case Phase::Init: return "Init";
    case Phase::Handshake: return "Handshake";
    case Phase::Opening: return "Opening";
    case Phase::Open: return "Open";
    case Phase::Updating: return "Updating";
    case Phase::CoopClosing: return "CoopClosing";
    case Phase::UnilateralExiting: return "UnilateralExiting";
    case Phase::Disputing: return "Disputing";
    case Phase::TimedOutEnforcing: return "TimedOutEnforcing";
    case Phase::Closed: return "Closed";
    case Phase::Aborted: return "Aborted";
    }
    return "?";
}

Bytes PunishStore::serialize() const
{
    ByteWriter w;
    w.u8(present ? 1 : 0);
    w.u32(isn);
    w.u32(threshold);
    w.raw(commit.span());
    w.raw(punish.span());
    return std::move(w).bytes();
}

// ---- StateBundle ---------------------------------------------------------

namespace {

const Transaction* find_tx(const StateBundle& b, TemplateId id)
{
    const auto pair_tx = [](const std::optional<txgraph::PunishPair>& p, bool commit) -> const Transaction* {
        if (!p) return nullptr;
        return commit ? &p->commit : &p->punish;
    };
    switch (id) {
    case TemplateId::WtAnchor: return b.anchor ? &*b.anchor : nullptr;
    case TemplateId::CommitExit: return b.exits ? &b.exits->commit_exit : nullptr;
    case TemplateId::AssertExit: return b.exits ? &b.exits->assert_exit : nullptr;
    case TemplateId::FinalizeExit: return b.exits ? &b.exits->finalize_exit : nullptr;
    case TemplateId::ExpireAlice: return b.exits ? &b.exits->expire_alice : nullptr;
    case TemplateId::ExpireBob: return b.exits ? &b.exits->expire_bob : nullptr;
    case TemplateId::CommitPunishAlice: return b.punish ? &b.punish->against_alice.commit : nullptr;
    case TemplateId::PunishAlice: return b.punish ? &b.punish->against_alice.punish : nullptr;
    case TemplateId::CommitPunishBob: return b.punish ? &b.punish->against_bob.commit : nullptr;
    case TemplateId::PunishBob: return b.punish ? &b.punish->against_bob.punish : nullptr;
    case TemplateId::WtaCommitPunish: return pair_tx(b.wta, true);
    case TemplateId::WtaPunish: return pair_tx(b.wta, false);
    case TemplateId::WtbCommitPunish: return pair_tx(b.wtb, true);
    case TemplateId::WtbPunish: return pair_tx(b.wtb, false);
    case TemplateId::CooperativeClose: return nullptr;
    }
    return nullptr;
}

std::pair<TemplateId, TemplateId> punish_ids(Role victim)
{
    return victim == Role::Alice ? std::pair{TemplateId::CommitPunishAlice, TemplateId::PunishAlice}
                                 : std::pair{TemplateId::CommitPunishBob, TemplateId::PunishBob};
}

std::pair<TemplateId, TemplateId> tower_ids(Role client)
{
    return client == Role::Alice ? std::pair{TemplateId::WtaCommitPunish, TemplateId::WtaPunish}
                                 : std::pair{TemplateId::WtbCommitPunish, TemplateId::WtbPunish};
}

std::string short_id(const Txid& id)
{
    return id.hex().substr(0, 16);
}

}  // namespace

const Transaction& StateBundle::tx(TemplateId id) const
{
    const auto* t = find_tx(*this, id);
    if (!t) throw Error(Errc::ProtocolViolation, std::string("state has no template ") + template_name(id));
    return *t;
}

bool StateBundle::has(TemplateId id) const
{
    return find_tx(*this, id) != nullptr;
}

bool StateBundle::complete(TemplateId id) const
{
    const auto* t = find_tx(*this, id);
    if (!t) return false;
    auto it = full.find(id);
    if (it == full.end()) return false;
    for (auto path : txgraph::required_paths(*t))
        if (!it->second.count(path)) return false;
    return true;
}

bool StateBundle::exit_ready() const
{
    return complete(TemplateId::CommitExit) && complete(TemplateId::AssertExit) &&
           complete(TemplateId::FinalizeExit);
}

// ---- construction --------------------------------------------------------

PeerEngine::PeerEngine(Role role, ChannelConfig cfg, std::uint64_t seed, chain::Chain& chain,
                       crypto::SignerRegistry& registry, EngineOptions options)
    : role_(role),
      cfg_(std::move(cfg)),
      opts_(std::move(options)),
      chain_(chain),
      registry_(registry),
      rng_(seed),
      cov_key_(rng_.bytes<crypto::Hash256>()),
      payout_key_(rng_.bytes<crypto::Hash256>()),
      funding_key_(rng_.bytes<crypto::Hash256>()),
      timeout_preimage_(rng_.bytes<crypto::Preimage>()),
      ots_(crypto::OTKeyPair::generate(cfg_.ot, rng_.bytes<crypto::Hash256>())),
      chain_seed_(rng_.bytes<crypto::Hash256>())
{
    cfg_.validate();
    registry_.enroll(cov_key_);
    registry_.enroll(payout_key_);
    registry_.enroll(funding_key_);
}

script::OutputLock PeerEngine::funding_lock() const
{
    return script::OutputLock::script_hash({script::op::CSigV{funding_key_.id()}});
}

script::OutputLock PeerEngine::address() const
{
    return script::OutputLock::script_hash({script::op::CSigV{payout_key_.id()}});
}

void PeerEngine::fund(const Outpoint& at, Amount amount, Amount deposit)
{
    funding_ = txgraph::FundingSource{at, amount, funding_lock(), deposit, funding_lock()};
}

void PeerEngine::learn_preimage(const crypto::Preimage& p)
{
    preimages_[crypto::commit(p)] = p;
}

void PeerEngine::set_cheat(const CheatConfig& cheat)
{
    opts_.cheat = cheat;
}

const txgraph::StateSnapshot& PeerEngine::state() const
{
    return current_.state;
}

const txgraph::ChannelParams& PeerEngine::params() const
{
    if (!params_) throw Error(Errc::ProtocolViolation, "channel parameters not agreed yet");
    return *params_;
}

const txgraph::ChannelAnchors& PeerEngine::anchors() const
{
    if (!anchors_) throw Error(Errc::ProtocolViolation, "channel not set up yet");
    return *anchors_;
}

const Transaction& PeerEngine::setup_tx() const
{
    if (!setup_) throw Error(Errc::ProtocolViolation, "channel not set up yet");
    return *setup_;
}

const SequenceManager& PeerEngine::sequence() const
{
    if (!seq_) throw Error(Errc::ProtocolViolation, "channel not set up yet");
    return *seq_;
}

const StateBundle* PeerEngine::bundle(std::uint32_t isn) const
{
    if (current_.state.isn == isn && current_.exits) return &current_;
    if (pending_ && pending_->state.isn == isn) return &*pending_;
    if (revoked_ && revoked_->state.isn == isn) return &*revoked_;
    for (const auto& b : history_)
        if (b.state.isn == isn) return &b;
    return nullptr;
}

std::size_t PeerEngine::storage_bytes() const
{
    std::size_t n = store_.serialize().size();
    for (auto id : {TemplateId::CommitExit, TemplateId::AssertExit, TemplateId::FinalizeExit}) {
        auto it = current_.full.find(id);
        if (it != current_.full.end()) n += it->second.size() * crypto::CovenantSignature::kSize;
    }
    n += (expire_alice_sigs_.size() + expire_bob_sigs_.size()) * crypto::CovenantSignature::kSize;
    if (anchor_sig_) n += crypto::CovenantSignature::kSize;
    return n;
}

// ---- logging and messaging -----------------------------------------------

void PeerEngine::emit(const std::string& event, std::vector<Field> fields)
{
    json j;
    j["tick"] = now_;
    j["party"] = role_name(role_);
    j["event"] = event;
    for (auto& [k, v] : fields) std::visit([&, key = k](const auto& x) { j[key] = x; }, v);
    log_.push_back(j.dump());
}

void PeerEngine::set_phase(Phase p)
{
    if (p == phase_) return;
    emit("phase", {{"from", phase_name(phase_)}, {"to", phase_name(p)}});
    phase_ = p;
}

bool PeerEngine::gate(int protocol_step)
{
    if (halted_) return false;
    const auto& halt = opts_.cheat.halt_after_step;
    if (ctx_ && !ctx_->setup && halt && protocol_step > *halt) {
        halted_ = true;
        act_pending_ = true;
        emit("halt", {{"after_step", std::int64_t{*halt}}, {"isn", std::int64_t{ctx_->isn}}});
        return false;
    }
    return true;
}

void PeerEngine::send(Message m, int protocol_step)
{
    if (!gate(protocol_step)) {
        emit("withhold", {{"msg", msg_kind_name(m.kind)}, {"step", std::int64_t{m.step}}});
        return;
    }
    m.from = role_;
    if (setup_) m.channel = setup_->txid();
    emit("send", {{"msg", msg_kind_name(m.kind)}, {"step", std::int64_t{m.step}}, {"isn", std::int64_t{m.isn}}});
    outbox_.push_back(std::move(m));
}

void PeerEngine::deliver(const Message& m)
{
    inbox_.push_back(m);
}

std::vector<Message> PeerEngine::take_messages()
{
    return std::exchange(outbox_, {});
}

std::vector<Bytes> PeerEngine::take_tower_records()
{
    return std::exchange(tower_outbox_, {});
}

std::vector<std::string> PeerEngine::take_log()
{
    return std::exchange(log_, {});
}

void PeerEngine::handle(const Message& m)
{
    if (halted_) {
        emit("ignore", {{"msg", msg_kind_name(m.kind)}, {"step", std::int64_t{m.step}}});
        return;
    }
    const std::pair<int, std::uint32_t> key{static_cast<int>(m.kind) * 100 + m.step, m.isn};
    if (!seen_.insert(key).second) {
        emit("replay", {{"msg", msg_kind_name(m.kind)}, {"step", std::int64_t{m.step}}});
        return;
    }
    emit("recv", {{"msg", msg_kind_name(m.kind)}, {"step", std::int64_t{m.step}}, {"isn", std::int64_t{m.isn}}});
    switch (m.kind) {
    case MsgKind::Hello: on_hello(m); break;
    case MsgKind::SlotRequest:
    case MsgKind::SlotOffer:
    case MsgKind::SlotReply: on_slot(m); break;
    case MsgKind::Propose: on_propose(m); break;
    case MsgKind::Sigs: on_sigs(m); break;
    case MsgKind::KeyReveal: on_key_reveal(m); break;
    case MsgKind::CloseRequest: on_close_request(m); break;
    case MsgKind::CloseSigs: on_close_sigs(m); break;
    case MsgKind::Abort: on_abort(m); break;
    }
}

// ---- setup ---------------------------------------------------------------

PeerInfo PeerEngine::my_info() const
{
    PeerInfo i;
    i.covenant = cov_key_.id();
    i.payout = payout_key_.id();
    i.funding_key = funding_key_.id();
    i.ots = ots_.public_key();
    i.timeout_hash = crypto::commit(timeout_preimage_);
    i.funding = *funding_;
    i.address = address();
    i.tower_address = opts_.tower_address.value_or(address());
    i.has_tower = opts_.has_tower;
    return i;
}

void PeerEngine::start_setup()
{
    if (role_ != Role::Alice) throw Error(Errc::ProtocolViolation, "the funding proposer is alice");
    if (!funding_) throw Error(Errc::InvalidParams, "no funding source");
    if (phase_ != Phase::Init) throw Error(Errc::ProtocolViolation, "setup already started");
    p_e_ = rng_.bytes<crypto::Preimage>();
    mine_ = my_info();
    mine_->p_e = p_e_;
    mine_->anchor_nonce.resize(watchtower::L2Packet::kNonceSize);
    rng_.fill(mine_->anchor_nonce);
    mine_->esn_seed = rng_.bytes<crypto::Hash256>();
    ctx_ = UpdateCtx{};
    ctx_->setup = true;
    ctx_->last_progress = now_;
    set_phase(Phase::Handshake);
    Message m;
    m.kind = MsgKind::Hello;
    m.hello = mine_;
    send(std::move(m), 1);
}

void PeerEngine::on_hello(const Message& m)
{
    if (theirs_ || !m.hello) return;
    if (m.hello->ots.params != cfg_.ot) {
        emit("abort", {{"reason", "HandshakeMismatch"}, {"detail", "OT parameters differ"}});
        set_phase(Phase::Aborted);
        ctx_.reset();
        return;
    }
    theirs_ = *m.hello;
    if (role_ == Role::Bob) {
        if (!funding_ || !m.hello->p_e || m.hello->anchor_nonce.size() != watchtower::L2Packet::kNonceSize) {
            emit("abort", {{"reason", "HandshakeMismatch"}, {"detail", "incomplete hello"}});
            set_phase(Phase::Aborted);
            return;
        }
        p_e_ = *m.hello->p_e;
        mine_ = my_info();
        ctx_ = UpdateCtx{};
        ctx_->setup = true;
        ctx_->last_progress = now_;
        set_phase(Phase::Handshake);
        Message reply;
        reply.kind = MsgKind::Hello;
        reply.hello = mine_;
        send(std::move(reply), 1);
    }
    try {
        build_channel();
    } catch (const Error& e) {
        emit("abort", {{"reason", "FundingRejected"}, {"detail", e.what()}});
        set_phase(Phase::Aborted);
        ctx_.reset();
        return;
    }
    ctx_->last_progress = now_;
    advance();
}

void PeerEngine::build_channel()
{
    const PeerInfo& a = role_ == Role::Alice ? *mine_ : *theirs_;
    const PeerInfo& b = role_ == Role::Alice ? *theirs_ : *mine_;
    txgraph::ChannelParams p;
    p.i_bal = cfg_.i_bal;
    p.epsilon = cfg_.epsilon;
    p.T = cfg_.T;
    p.keyset = {a.covenant, b.covenant};
    p.alice_address = a.address;
    p.bob_address = b.address;
    p.shared_address = script::OutputLock::tap_tree({{script::op::CSigV{a.payout}}, {script::op::CSigV{b.payout}}});
    p.payout = {a.payout, b.payout};
    p.h_a = a.timeout_hash;
    p.h_b = b.timeout_hash;
    p.h_e = crypto::commit(p_e_);
    p.k_a = a.ots;
    p.k_b = b.ots;
    p.privacy_level = cfg_.privacy_level;
    p.separate_wt_outputs = cfg_.separate_wt_outputs;
    p.wta_address = a.tower_address;
    p.wtb_address = b.tower_address;
    p.tower_reward = cfg_.tower_reward;
    p.anchor_nonce = a.anchor_nonce;
    p.fee_commitment = cfg_.fee_commitment;
    p.validate();
    params_ = p;
    setup_ = txgraph::build_setup(p, a.funding, b.funding);
    anchors_ = txgraph::derive_anchors(p, *setup_);

    SequenceConfig sc;
    sc.seed = a.esn_seed;
    sc.report_stride = cfg_.privacy_level == 2 ? cfg_.report_stride : 0;
    sc.max_gap = cfg_.max_gap;
    sc.value_bits = cfg_.ot.value_bits;
    seq_.emplace(sc);
    if (cfg_.privacy_level == 3) key_chain_.emplace(chain_seed_, cfg_.key_chain_length);

    txgraph::StateSnapshot s0;
    s0.isn = 0;
    s0.esn = seq_->esn();
    const Amount fee_a = cfg_.fee_commitment / 2;
    s0.a_bal = a.funding.deposit - fee_a;
    s0.b_bal = b.funding.deposit - (cfg_.fee_commitment - fee_a);
    if (!s0.conserves(p)) throw Error(Errc::InvalidParams, "deposits do not cover the fee commitment");
    current_ = make_bundle(s0);
    emit("channel", {{"setup", short_id(setup_->txid())}, {"esn0", std::int64_t{s0.esn}}});
}

std::vector<TemplateId> PeerEngine::setup_ids() const
{
    std::vector<TemplateId> ids{TemplateId::CommitExit, TemplateId::AssertExit, TemplateId::FinalizeExit,
                                TemplateId::ExpireAlice, TemplateId::ExpireBob};
    if (cfg_.privacy_level >= 2) ids.push_back(TemplateId::WtAnchor);
    return ids;
}

void PeerEngine::advance_setup()
{
    auto& c = *ctx_;
    const bool alice = role_ == Role::Alice;
    if (cfg_.privacy_level == 3 && !c.slots_done) {
        if (alice && !c.sent.count(21)) {
            c.sent.insert(21);
            Message m;
            m.kind = MsgKind::SlotRequest;
            m.step = 21;
            const auto [ci, pi] = tower_ids(Role::Alice);
            m.partials = sign(current_, {ci, pi});
            send(std::move(m), 2);
        }
        return;
    }
    const auto ids = setup_ids();
    if (alice && !c.sent.count(31)) {
        c.sent.insert(31);
        Message m;
        m.kind = MsgKind::Sigs;
        m.step = 31;
        m.partials = sign(current_, ids);
        m.funding_sig = crypto::single_sign(funding_key_, setup_->sighash());
        send(std::move(m), 3);
    }
    if (!alice && c.got.count(31) && !c.sent.count(32)) {
        c.sent.insert(32);
        Message m;
        m.kind = MsgKind::Sigs;
        m.step = 32;
        m.partials = sign(current_, ids);
        m.funding_sig = crypto::single_sign(funding_key_, setup_->sighash());
        send(std::move(m), 3);
        live_ = true;
        set_phase(Phase::Opening);
    }
    if (alice && c.got.count(32) && !c.sent.count(33)) {
        c.sent.insert(33);
        for (auto id : ids)
            if (!current_.complete(id)) {
                emit("abort", {{"reason", "HandshakeMismatch"}, {"detail", template_name(id)}});
                set_phase(Phase::Aborted);
                ctx_.reset();
                return;
            }
        Transaction tx = *setup_;
        const auto own = crypto::single_sign(funding_key_, tx.sighash());
        for (std::uint32_t i = 0; i < 2; ++i) {
            script::SigningMaterial mat;
            mat.single = i == 0 ? own : *their_funding_sig_;
            tx.inputs[i].witness = script::build_witness_for(tx.inputs[i].spent_lock, tx.inputs[i].path, mat);
        }
        live_ = true;
        set_phase(Phase::Opening);
        submit(tx);
    }
}

void PeerEngine::on_open()
{
    set_phase(Phase::Open);
    ctx_.reset();
    expire_set_ = *current_.exits;
    expire_alice_sigs_ = current_.full[TemplateId::ExpireAlice];
    expire_bob_sigs_ = current_.full[TemplateId::ExpireBob];
    if (cfg_.privacy_level >= 2) anchor_sig_ = current_.full[TemplateId::WtAnchor].at(0);
    current_.full.erase(TemplateId::ExpireAlice);
    current_.full.erase(TemplateId::ExpireBob);
    current_.full.erase(TemplateId::WtAnchor);
    current_.mine.clear();
    current_.theirs.clear();
    emit("open", {{"isn", std::int64_t{0}}, {"a_bal", current_.state.a_bal}, {"b_bal", current_.state.b_bal}});
    if (!opts_.has_tower) return;

    const auto& p = *params_;
    watchtower::WireRecord r;
    r.level = static_cast<std::uint8_t>(cfg_.privacy_level);
    r.kind = watchtower::WireKind::Register;
    switch (cfg_.privacy_level) {
    case 1: {
        r.channel = setup_->txid();
        watchtower::L1Register reg;
        reg.shared = !anchors_->tower_disputes(role_).has_value();
        reg.tmpl = txgraph::punish_template(p, other(role_), !reg.shared);
        r.payload = reg.encode();
        break;
    }
    case 2:
        tower_handle_ = rng_.bytes<crypto::Hash256>();
        r.channel = tower_handle_;
        break;
    default:
        r.channel = anchors_->tower_channel_id();
        r.payload = txgraph::punish_template(p, other(role_), true).serialize();
        break;
    }
    tower_outbox_.push_back(r.encode());
    registered_ = true;
    emit("tower-register", {{"level", std::int64_t{cfg_.privacy_level}}});
}

// ---- templates and signatures ---------------------------------------------

const PeerInfo& PeerEngine::info(Role r) const
{
    return r == role_ ? *mine_ : *theirs_;
}

StateBundle PeerEngine::make_bundle(const txgraph::StateSnapshot& s) const
{
    const auto& p = *params_;
    const auto& a = *anchors_;
    StateBundle b;
    b.state = s;
    if (s.isn > 0) b.punish = txgraph::build_punish_set(p, a, s);
    for (Role client : {Role::Alice, Role::Bob}) {
        const auto& out = a.tower_disputes(client);
        if (!out) continue;
        auto pair = txgraph::build_punish_pair(txgraph::punish_template(p, other(client), true), *out, a.funds,
                                               txgraph::tower_threshold(p, s));
        (client == Role::Alice ? b.wta : b.wtb) = std::move(pair);
    }
    if (s.isn == 0 && a.wt_anchor_tx) b.anchor = a.wt_anchor_tx;
    if (cfg_.privacy_level < 3) attach_exits(b);
    return b;
}

void PeerEngine::attach_exits(StateBundle& b) const
{
    b.exits = txgraph::build_exit_set(*params_, *anchors_, b.state, b.payload);
}

void PeerEngine::aggregate(StateBundle& b, TemplateId id, std::uint8_t path) const
{
    auto m = b.mine.find({id, path});
    auto t = b.theirs.find({id, path});
    if (m == b.mine.end() || t == b.theirs.end()) return;
    const auto& alice = role_ == Role::Alice ? m->second : t->second;
    const auto& bob = role_ == Role::Alice ? t->second : m->second;
    b.full[id][path] = crypto::covenant_aggregate(params_->keyset, alice, bob);
}

std::vector<NamedPartial> PeerEngine::sign(StateBundle& b, const std::vector<TemplateId>& ids)
{
    std::vector<NamedPartial> out;
    for (auto id : ids) {
        const auto& tx = b.tx(id);
        const auto digest = tx.sighash();
        for (auto path : txgraph::required_paths(tx)) {
            auto ps = crypto::covenant_partial_sign(cov_key_, params_->keyset, digest, path);
            b.mine[{id, path}] = ps;
            out.push_back({id, ps});
            aggregate(b, id, path);
        }
    }
    return out;
}

bool PeerEngine::accept(StateBundle& b, const std::vector<NamedPartial>& parts, const std::vector<TemplateId>& allowed)
{
    std::set<std::pair<TemplateId, std::uint8_t>> got;
    for (const auto& np : parts) {
        if (std::find(allowed.begin(), allowed.end(), np.id) == allowed.end() || !b.has(np.id)) return false;
        const auto& tx = b.tx(np.id);
        const auto paths = txgraph::required_paths(tx);
        if (std::find(paths.begin(), paths.end(), np.sig.path) == paths.end()) return false;
        if (np.sig.signer != theirs_->covenant) return false;
        if (!registry_.verify_partial(params_->keyset, tx.sighash(), np.sig.path, np.sig)) return false;
        got.insert({np.id, np.sig.path});
    }
    for (auto id : allowed)
        for (auto path : txgraph::required_paths(b.tx(id)))
            if (!got.count({id, path})) return false;
    for (const auto& np : parts) {
        b.theirs[{np.id, np.sig.path}] = np.sig;
        // Our half costs nothing to add now; it is sent later or never.
        if (!b.mine.count({np.id, np.sig.path}))
            b.mine[{np.id, np.sig.path}] =
                crypto::covenant_partial_sign(cov_key_, params_->keyset, b.tx(np.id).sighash(), np.sig.path);
        aggregate(b, np.id, np.sig.path);
    }
    return true;
}

StateBundle& PeerEngine::building()
{
    return ctx_->setup ? current_ : *pending_;
}

std::vector<TemplateId> PeerEngine::step_ids(int step) const
{
    const auto& c = *ctx_;
    if (c.setup) return setup_ids();
    const Role payer = c.payer;
    const Role receiver = other(payer);
    std::vector<TemplateId> ids;
    const auto with_pair = [&](Role victim, Role client) {
        const auto [ci, pi] = punish_ids(victim);
        ids = {ci, pi};
        if (cfg_.privacy_level < 3 && info(client).has_tower && pending_->has(tower_ids(client).first)) {
            ids.push_back(tower_ids(client).first);
            ids.push_back(tower_ids(client).second);
        }
    };
    switch (step) {
    case 31:
    case 32: return {TemplateId::AssertExit, TemplateId::FinalizeExit};
    case 4:
    case 6: return {TemplateId::CommitExit};
    case 5: with_pair(payer, receiver); return ids;
    case 7: with_pair(receiver, payer); return ids;
    default: return {};
    }
}

// ---- updates -------------------------------------------------------------

void PeerEngine::propose(const UpdateOp& op)
{
    if (phase_ != Phase::Open || ctx_) throw Error(Errc::ProtocolViolation, "channel is not open for updates");
    txgraph::StateSnapshot next;
    try {
        next = op.apply(current_.state, seq_->peek_next());
        if (cfg_.privacy_level == 3 && next.esn + 1 > cfg_.key_chain_length)
            throw Error(Errc::EsnOverflow, "key chain exhausted");
    } catch (const Error& e) {
        if (e.code() == Errc::EsnOverflow) {
            emit("esn-overflow", {{"isn", std::int64_t{current_.state.isn}}});
            cooperative_close();
        }
        throw;
    }
    if (!next.conserves(*params_)) throw Error(Errc::InvalidParams, "update breaks conservation");
    ctx_ = UpdateCtx{};
    ctx_->op = op;
    ctx_->payer = op.payer(current_.state);
    ctx_->isn = next.isn;
    ctx_->last_progress = now_;
    pending_ = make_bundle(next);
    set_phase(Phase::Updating);
    emit("propose", {{"op", op.describe()}, {"isn", std::int64_t{next.isn}}});
    Message m;
    m.kind = MsgKind::Propose;
    m.isn = next.isn;
    m.step = 1;
    m.update = op;
    send(std::move(m), 1);
    advance();
}

void PeerEngine::on_propose(const Message& m)
{
    if (phase_ != Phase::Open || ctx_ || !m.update) {
        emit("refuse", {{"msg", "Propose"}, {"phase", phase_name(phase_)}});
        return;
    }
    if (m.isn != current_.state.isn + 1) {
        abort("ProtocolViolation: unexpected isn");
        return;
    }
    txgraph::StateSnapshot next;
    try {
        next = m.update->apply(current_.state, seq_->peek_next());
        if (cfg_.privacy_level == 3 && next.esn + 1 > cfg_.key_chain_length)
            throw Error(Errc::EsnOverflow, "key chain exhausted");
    } catch (const Error& e) {
        emit("refuse", {{"msg", "Propose"}, {"detail", e.what()}});
        if (e.code() == Errc::EsnOverflow) cooperative_close();
        return;
    }
    if (!next.conserves(*params_)) {
        abort("ProtocolViolation: update breaks conservation");
        return;
    }
    ctx_ = UpdateCtx{};
    ctx_->op = *m.update;
    ctx_->payer = m.update->payer(current_.state);
    ctx_->isn = next.isn;
    ctx_->last_progress = now_;
    ctx_->got.insert(1);
    pending_ = make_bundle(next);
    set_phase(Phase::Updating);
    advance();
}

crypto::CipherPacket PeerEngine::make_slot(const StateBundle& b, Role client)
{
    const auto [ci, pi] = tower_ids(client);
    watchtower::L3Slot slot{b.full.at(ci).at(0), b.full.at(pi).at(0)};
    const auto key = key_chain_->derive(b.state.esn + 1);
    return crypto::encrypt(key.span(), slot.encode(), rng_.bytes<crypto::Iv>());
}

void PeerEngine::finish_slots(StateBundle& b)
{
    auto& c = *ctx_;
    txgraph::CommitPayload payload{b.state.esn, *c.slot_a, *c.slot_b};
    b.payload = payload.encode();
    attach_exits(b);
    c.slots_done = true;
}

void PeerEngine::on_slot(const Message& m)
{
    if (!ctx_ || m.isn != ctx_->isn || cfg_.privacy_level != 3) return;
    auto& c = *ctx_;
    auto& b = building();
    const Role payer = c.payer;
    const Role receiver = other(payer);
    const bool me_payer = payer == role_;
    const auto ids_of = [](Role client) {
        const auto [ci, pi] = tower_ids(client);
        return std::vector<TemplateId>{ci, pi};
    };
    const auto slot_of = [&](Role client) -> std::optional<crypto::CipherPacket>& {
        return client == Role::Alice ? c.slot_a : c.slot_b;
    };
    if (m.kind == MsgKind::SlotRequest && !me_payer) {
        if (!accept(b, m.partials, ids_of(payer))) {
            abort(c.setup ? "HandshakeMismatch" : "BadSignature");
            return;
        }
        slot_of(payer) = make_slot(b, payer);
        c.got.insert(21);
        c.sent.insert(22);
        Message r;
        r.kind = MsgKind::SlotOffer;
        r.isn = c.isn;
        r.step = 22;
        r.slot = slot_of(payer);
        r.partials = sign(b, ids_of(receiver));
        send(std::move(r), 2);
    } else if (m.kind == MsgKind::SlotOffer && me_payer && m.slot) {
        if (!accept(b, m.partials, ids_of(receiver)) || m.slot->ciphertext.size() != txgraph::kTowerPayloadSize) {
            abort(c.setup ? "HandshakeMismatch" : "BadSignature");
            return;
        }
        slot_of(payer) = *m.slot;
        slot_of(receiver) = make_slot(b, receiver);
        c.got.insert(22);
        c.sent.insert(23);
        Message r;
        r.kind = MsgKind::SlotReply;
        r.isn = c.isn;
        r.step = 23;
        r.slot = slot_of(receiver);
        send(std::move(r), 2);
        if (halted_) return;
        finish_slots(b);
    } else if (m.kind == MsgKind::SlotReply && !me_payer && m.slot) {
        if (m.slot->ciphertext.size() != txgraph::kTowerPayloadSize) {
            abort("ProtocolViolation: bad slot");
            return;
        }
        slot_of(receiver) = *m.slot;
        c.got.insert(23);
        finish_slots(b);
    } else {
        return;
    }
    c.last_progress = now_;
    advance();
}

void PeerEngine::on_sigs(const Message& m)
{
    if (!ctx_ || m.isn != ctx_->isn) {
        emit("stale", {{"msg", "Sigs"}, {"isn", std::int64_t{m.isn}}});
        return;
    }
    auto& c = *ctx_;
    const bool me_payer = c.payer == role_;
    static const std::set<int> payer_gets{32, 4, 7};
    static const std::set<int> receiver_gets{31, 5, 6};
    if (!(me_payer ? payer_gets : receiver_gets).count(m.step) || c.got.count(m.step)) {
        abort(c.setup ? "HandshakeMismatch" : "ProtocolViolation: unexpected step");
        return;
    }
    auto& b = building();
    if (!b.exits || !accept(b, m.partials, step_ids(m.step))) {
        abort(c.setup ? "HandshakeMismatch" : "BadSignature");
        return;
    }
    if (c.setup) {
        if (!m.funding_sig ||
            !registry_.verify_single(theirs_->funding_key, setup_->sighash(), m.funding_sig->span())) {
            abort("HandshakeMismatch");
            return;
        }
        their_funding_sig_ = m.funding_sig;
    }
    c.got.insert(m.step);
    c.last_progress = now_;
    advance();
}

void PeerEngine::advance()
{
    if (!ctx_ || halted_) return;
    if (ctx_->setup) {
        advance_setup();
        return;
    }
    auto& c = *ctx_;
    auto& b = *pending_;
    const bool me_payer = c.payer == role_;
    if (cfg_.privacy_level == 3 && !c.slots_done) {
        if (me_payer && !c.sent.count(21)) {
            c.sent.insert(21);
            Message m;
            m.kind = MsgKind::SlotRequest;
            m.isn = c.isn;
            m.step = 21;
            const auto [ci, pi] = tower_ids(role_);
            m.partials = sign(b, {ci, pi});
            send(std::move(m), 2);
        }
        return;
    }
    const auto emit_sigs = [&](int step, int protocol_step) {
        c.sent.insert(step);
        Message m;
        m.kind = MsgKind::Sigs;
        m.isn = c.isn;
        m.step = static_cast<std::uint8_t>(step);
        m.partials = sign(b, step_ids(step));
        send(std::move(m), protocol_step);
    };
    if (me_payer && !c.sent.count(31)) emit_sigs(31, 3);
    if (!me_payer && c.got.count(31) && !c.sent.count(32)) {
        emit_sigs(32, 3);
        emit_sigs(4, 4);
    }
    if (me_payer && c.got.count(32) && c.got.count(4) && !c.sent.count(5)) {
        emit_sigs(5, 5);
        if (!halted_) revoked_self_ = true;
        emit_sigs(6, 6);
    }
    if (!me_payer && c.got.count(5) && c.got.count(6) && !c.sent.count(7)) {
        emit_sigs(7, 7);
        if (!halted_) revoked_self_ = true;
        complete_update();
        return;
    }
    if (me_payer && c.got.count(7) && !c.sent.count(9)) {
        c.sent.insert(9);
        complete_update();
    }
}

void PeerEngine::complete_update()
{
    auto& c = *ctx_;
    const bool me_payer = c.payer == role_;
    if (!gate(me_payer ? 9 : 8)) return;
    StateBundle prev = std::move(current_);
    current_ = std::move(*pending_);
    pending_.reset();
    revoked_self_ = false;
    const auto esn = seq_->advance();
    if (esn != current_.state.esn || seq_->isn() != current_.state.isn)
        throw Error(Errc::ProtocolViolation, "sequence manager out of step");

    const auto [ci, pi] = punish_ids(other(role_));
    if (current_.complete(ci) && current_.complete(pi)) {
        store_.present = true;
        store_.isn = current_.state.isn;
        store_.threshold = current_.state.esn;
        store_.commit = current_.full.at(ci).at(0);
        store_.punish = current_.full.at(pi).at(0);
    }
    tower_handoff(prev);

    // Only the exit signatures of the new state and the punish store survive.
    current_.mine.clear();
    current_.theirs.clear();
    for (auto id : {ci, pi, tower_ids(Role::Alice).first, tower_ids(Role::Alice).second,
                    tower_ids(Role::Bob).first, tower_ids(Role::Bob).second, punish_ids(role_).first,
                    punish_ids(role_).second})
        current_.full.erase(id);
    if (opts_.cheat.keep_history) history_.push_back(prev);
    if (!opts_.cheat.keep_history && !opts_.cheat.halt_after_step) {
        prev.full.clear();
        prev.mine.clear();
        prev.theirs.clear();
    }
    revoked_ = std::move(prev);
    std::erase_if(seen_, [&](const auto& k) { return k.second < current_.state.isn; });
    ctx_.reset();
    set_phase(Phase::Open);
    emit("state", {{"isn", std::int64_t{current_.state.isn}},
                   {"esn", std::int64_t{current_.state.esn}},
                   {"a_bal", current_.state.a_bal},
                   {"b_bal", current_.state.b_bal},
                   {"htlcs", static_cast<std::int64_t>(current_.state.htlcs.size())}});
    if (opts_.cheat.halt_after_step && !halted_) {
        halted_ = true;
        act_pending_ = true;
        emit("halt", {{"after_step", std::int64_t{*opts_.cheat.halt_after_step}},
                      {"isn", std::int64_t{current_.state.isn}}});
    }
}

void PeerEngine::tower_handoff(const StateBundle& prev)
{
    const auto& p = *params_;
    const auto& s = current_.state;
    if (cfg_.privacy_level == 3) {
        Message m;
        m.kind = MsgKind::KeyReveal;
        m.isn = s.isn;
        m.key_index = prev.state.esn + 1;
        m.key = key_chain_->derive(m.key_index);
        m.step = ctx_->payer == role_ ? 9 : 8;
        send(std::move(m), m.step);
        return;
    }
    if (!opts_.has_tower) return;
    const bool shared = !anchors_->tower_disputes(role_).has_value();
    const auto [ci, pi] = shared ? punish_ids(other(role_)) : tower_ids(role_);
    if (!current_.complete(ci) || !current_.complete(pi)) return;
    watchtower::SignedPair pair{shared ? s.esn : txgraph::tower_threshold(p, s), current_.full.at(ci).at(0),
                                current_.full.at(pi).at(0)};
    if (cfg_.privacy_level == 1) {
        watchtower::WireRecord r;
        r.channel = setup_->txid();
        r.level = 1;
        r.kind = watchtower::WireKind::Update;
        r.payload = pair.encode();
        tower_outbox_.push_back(r.encode());
        emit("tower-update", {{"isn", std::int64_t{s.isn}}});
        return;
    }
    if (!seq_->reported(s.isn)) return;
    watchtower::L2Packet pkt;
    pkt.tmpl = txgraph::punish_template(p, other(role_), true);
    pkt.setup = setup_->txid();
    pkt.epsilon = p.epsilon;
    pkt.nonce = p.anchor_nonce;
    pkt.anchor = *anchor_sig_;
    pkt.pair = pair;
    l2_plain_ = pkt.encode();
    emit("tower-report", {{"isn", std::int64_t{s.isn}}});
}

void PeerEngine::on_key_reveal(const Message& m)
{
    if (cfg_.privacy_level != 3 || !revoked_ || m.key_index != revoked_->state.esn + 1) {
        emit("bad-key", {{"index", std::int64_t{m.key_index}}});
        return;
    }
    try {
        const auto payload = txgraph::CommitPayload::decode(revoked_->payload);
        if (!payload) throw Error(Errc::Malformed, "no payload");
        const auto slot = watchtower::L3Slot::decode(crypto::decrypt(m.key.span(), payload->slot_of(role_)));
        const auto& pair = role_ == Role::Alice ? revoked_->wta : revoked_->wtb;
        if (!pair || !registry_.verify_covenant(params_->keyset, pair->commit.sighash(), 0, slot.commit.span()) ||
            !registry_.verify_covenant(params_->keyset, pair->punish.sighash(), 0, slot.punish.span()))
            throw Error(Errc::IntegrityFailure, "slot signatures do not verify");
    } catch (const Error& e) {
        emit("bad-slot", {{"detail", e.what()}});
        return;
    }
    if (!opts_.has_tower) return;
    watchtower::WireRecord r;
    r.channel = anchors_->tower_channel_id();
    r.level = 3;
    r.kind = watchtower::WireKind::Update;
    r.payload = watchtower::L3Update{m.key_index, m.key}.encode();
    tower_outbox_.push_back(r.encode());
    emit("tower-update", {{"index", std::int64_t{m.key_index}}});
}

void PeerEngine::abort(const std::string& reason, bool notify)
{
    emit("abort", {{"reason", reason}});
    if (notify) {
        Message m;
        m.kind = MsgKind::Abort;
        m.isn = ctx_ ? ctx_->isn : current_.state.isn;
        m.reason = reason;
        send(std::move(m), 0);
    }
    const bool setup = ctx_ && ctx_->setup;
    ctx_.reset();
    set_phase(Phase::Aborted);
    if (!setup && live_) cooperative_close();
}

void PeerEngine::on_abort(const Message& m)
{
    if (!ctx_) return;
    abort("peer: " + m.reason, false);
}

// ---- cooperative close ---------------------------------------------------

const StateBundle& PeerEngine::exit_choice() const
{
    if (pending_ && pending_->exit_ready() &&
        (revoked_self_ || pending_->state.balance_of(role_) > current_.state.balance_of(role_)))
        return *pending_;
    return current_;
}

void PeerEngine::cooperative_close()
{
    if (!live_ || funds_spent_ || close_ || plan_ || watch_) return;
    if (!setup_ || !chain_.known(setup_->txid())) return;
    const auto& s = exit_choice().state;
    close_ = CloseCtx{s.isn, true, now_, txgraph::build_cooperative_close(*params_, *anchors_, s, cfg_.close_fee)};
    set_phase(Phase::CoopClosing);
    Message m;
    m.kind = MsgKind::CloseRequest;
    m.isn = s.isn;
    m.fee = cfg_.close_fee;
    send(std::move(m), 0);
}

void PeerEngine::on_close_request(const Message& m)
{
    if (!live_ || funds_spent_ || plan_ || watch_) return;
    const txgraph::StateSnapshot* s = nullptr;
    if (m.isn == current_.state.isn)
        s = &current_.state;
    else if (pending_ && pending_->state.isn == m.isn)
        s = &pending_->state;
    if (!s || m.fee > cfg_.close_fee) {
        emit("refuse", {{"msg", "CloseRequest"}, {"isn", std::int64_t{m.isn}}});
        return;
    }
    auto tx = txgraph::build_cooperative_close(*params_, *anchors_, *s, m.fee);
    if (ctx_) ctx_.reset();
    if (!close_ || !close_->requester) close_ = CloseCtx{m.isn, false, now_, tx};
    set_phase(Phase::CoopClosing);
    Message r;
    r.kind = MsgKind::CloseSigs;
    r.isn = m.isn;
    r.partials.push_back({TemplateId::CooperativeClose,
                          crypto::covenant_partial_sign(cov_key_, params_->keyset, tx.sighash(), 0)});
    send(std::move(r), 0);
}

void PeerEngine::on_close_sigs(const Message& m)
{
    if (!close_ || !close_->requester || m.isn != close_->isn || m.partials.size() != 1) return;
    auto tx = *close_->tx;
    const auto digest = tx.sighash();
    const auto& theirs = m.partials[0].sig;
    if (m.partials[0].id != TemplateId::CooperativeClose || theirs.path != 0 || theirs.signer != theirs_->covenant ||
        !registry_.verify_partial(params_->keyset, digest, 0, theirs)) {
        emit("bad-close-sigs", {});
        return;
    }
    const auto mine = crypto::covenant_partial_sign(cov_key_, params_->keyset, digest, 0);
    const auto full = role_ == Role::Alice ? crypto::covenant_aggregate(params_->keyset, mine, theirs)
                                           : crypto::covenant_aggregate(params_->keyset, theirs, mine);
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i) {
        const auto& slots = tx.inputs[i].path.slots;
        if (std::find(slots.begin(), slots.end(), script::Slot::PreimageA) != slots.end())
            txgraph::select_exit_branch(tx, i, role_);
    }
    txgraph::fill_witnesses(tx, {{0, full}}, own_preimage());
    submit(tx);
}

// ---- unilateral exit -----------------------------------------------------

script::SigningMaterial PeerEngine::own_preimage() const
{
    script::SigningMaterial m;
    (role_ == Role::Alice ? m.preimage_a : m.preimage_b) = timeout_preimage_;
    m.preimage_e = p_e_;
    return m;
}

void PeerEngine::unilateral_exit()
{
    if (!live_ || plan_ || watch_ || funds_spent_) return;
    close_.reset();
    start_exit(exit_choice(), true);
}

void PeerEngine::cheat_exit(std::uint32_t isn, bool assert_state, std::uint32_t assert_delay)
{
    const auto* b = bundle(isn);
    if (!b || !b->exit_ready()) throw Error(Errc::ProtocolViolation, "no signed exit for that state");
    const StateBundle copy = *b;
    ctx_.reset();
    close_.reset();
    plan_.reset();
    start_exit(copy, assert_state, assert_delay);
}

void PeerEngine::start_exit(const StateBundle& b, bool assert_state, std::uint32_t assert_delay)
{
    if (!b.exit_ready()) {
        emit("exit-unavailable", {{"isn", std::int64_t{b.state.isn}}});
        return;
    }
    ExitPlan plan;
    plan.bundle = b;
    plan.assert_state = assert_state;
    plan.assert_delay = assert_delay;
    const bool need_anchor = cfg_.privacy_level == 3 && !chain_.known(anchors_->wt_anchor_tx->txid());
    plan.stage = need_anchor ? ExitPlan::Stage::StartExit : ExitPlan::Stage::Commit;
    plan_ = std::move(plan);
    set_phase(Phase::UnilateralExiting);
    emit("exit", {{"isn", std::int64_t{b.state.isn}}, {"esn", std::int64_t{b.state.esn}}, {"assert", assert_state}});
    step_exit();
}

void PeerEngine::step_exit()
{
    if (!plan_) return;
    auto& plan = *plan_;
    const auto& b = plan.bundle;
    using Stage = ExitPlan::Stage;
    if (plan.stage == Stage::StartExit) {
        auto tx = *anchors_->wt_anchor_tx;
        txgraph::fill_witnesses(tx, {{0, *anchor_sig_}}, {});
        submit(tx);
        plan.stage = Stage::Commit;
    }
    if (plan.stage == Stage::Commit) {
        auto tx = b.exits->commit_exit;
        const auto by = chain_.spender(anchors_->exit.at);
        if (by && *by != tx.txid()) {
            emit("exit-raced", {{"by", short_id(*by)}});
            plan_.reset();
            return;
        }
        if (!by) {
            txgraph::select_exit_branch(tx, 0, role_);
            txgraph::fill_witnesses(tx, b.full.at(TemplateId::CommitExit), own_preimage());
            if (!submit(tx)) return;
        }
        plan.commit = tx.txid();
        plan.stage = plan.assert_state ? Stage::Assert : Stage::Stalling;
        if (plan.stage == Stage::Stalling) emit("stall", {{"isn", std::int64_t{b.state.isn}}});
    }
    if (plan.stage == Stage::Assert) {
        if (const auto by = chain_.spender({*plan.commit, 0})) {
            plan.asserted = *by;
            plan.stage = Stage::AwaitFinalize;
        } else {
            if (plan.assert_delay) {
                const auto h = chain_.confirmation_height(*plan.commit);
                if (!h || chain_.height() - *h < plan.assert_delay) return;
            }
            auto tx = b.exits->assert_exit;
            txgraph::select_assert_branch(tx, role_, cfg_.privacy_level);
            auto mat = own_preimage();
            try {
                mat.ots = ots_.sign(b.state.esn);
            } catch (const Error& e) {
                emit("ots-refused", {{"detail", e.what()}});
                plan.stage = Stage::Stalling;
                return;
            }
            txgraph::fill_witnesses(tx, b.full.at(TemplateId::AssertExit), mat);
            if (!submit(tx)) return;
            plan.asserted = tx.txid();
            plan.stage = Stage::AwaitFinalize;
        }
    }
    if (plan.stage == Stage::AwaitFinalize) {
        if (funds_spent_) {
            plan.stage = Stage::Done;
            return;
        }
        const auto h = chain_.confirmation_height(*plan.asserted);
        if (!h || chain_.height() - *h < cfg_.T) return;
        auto tx = b.exits->finalize_exit;
        txgraph::fill_witnesses(tx, b.full.at(TemplateId::FinalizeExit), own_preimage());
        submit(tx);
    }
}

// ---- chain reactions -----------------------------------------------------

void PeerEngine::process_chain()
{
    if (!anchors_) return;
    const auto& ids = chain_.accepted();
    for (; cursor_ < ids.size(); ++cursor_) {
        const auto id = ids[cursor_];
        const auto* tx = chain_.find(id);
        if (!tx) continue;
        for (std::uint32_t i = 0; i < tx->inputs.size(); ++i) {
            const auto& prev = tx->inputs[i].prevout;
            if (prev == anchors_->exit.at) on_exit_anchor_spent(*tx, id, i);
            if (watch_ && prev == chain::Outpoint{watch_->commit, 0}) on_commit_output_spent(id, i);
            if (prev == anchors_->funds.at) on_funds_spent(*tx, id);
        }
    }
}

std::optional<std::uint32_t> PeerEngine::find_committed_esn(const Transaction& commit) const
{
    if (cfg_.privacy_level == 3) {
        const auto data = commit.op_returns();
        if (data.empty()) return std::nullopt;
        const auto payload = txgraph::CommitPayload::decode(data[0]);
        if (!payload) return std::nullopt;
        return payload->esn;
    }
    if (commit.outputs.empty()) return std::nullopt;
    std::vector<std::uint32_t> esns = seq_->table(seq_->isn());
    if (pending_) esns.push_back(pending_->state.esn);
    for (auto esn : esns)
        if (commit.outputs[0].lock == txgraph::commit_exit_lock(*params_, esn)) return esn;
    return std::nullopt;
}

void PeerEngine::on_exit_anchor_spent(const Transaction& tx, const Txid& id, std::uint32_t input)
{
    if (plan_ && plan_->commit == id) return;
    if (tx.kind != chain::TxKind::CommitExit) return;
    const auto& w = chain_.observe_witness(id, input);
    Role committer = Role::Alice;
    if (txgraph::scrape_preimage(w, params_->h_a))
        committer = Role::Alice;
    else if (txgraph::scrape_preimage(w, params_->h_b))
        committer = Role::Bob;
    else
        return;
    if (committer == role_) return;
    Watch watch;
    watch.commit = id;
    watch.committer = committer;
    watch.esn = find_committed_esn(tx);
    emit("commit-seen", {{"by", role_name(committer)},
                         {"esn", watch.esn ? std::int64_t{*watch.esn} : std::int64_t{-1}}});
    ctx_.reset();
    close_.reset();
    if (plan_) emit("exit-raced", {{"by", short_id(id)}});
    plan_.reset();
    watch_ = watch;
    set_phase(Phase::Disputing);
}

void PeerEngine::on_commit_output_spent(const Txid& id, std::uint32_t input)
{
    auto& w = *watch_;
    const auto& wit = chain_.observe_witness(id, input);
    if (wit.leaf_index != 0) return;
    w.asserted = true;
    w.sig = txgraph::scrape_ots(wit, cfg_.ot);
    if (!w.sig) return;
    const auto& key = w.committer == Role::Alice ? params_->k_a : params_->k_b;
    w.m = crypto::ots_recover_value(key, *w.sig);
    if (!w.m) return;
    emit("assert-seen", {{"by", role_name(w.committer)}, {"esn", std::int64_t{*w.m}}});
    if (try_punish(*w.m)) return;

    // The latest state: finish it early with both timeout preimages.
    for (const StateBundle* b : {&current_, pending_ ? &*pending_ : nullptr}) {
        if (!b || b->state.esn != *w.m || !b->complete(TemplateId::FinalizeExit)) continue;
        const auto& cw = chain_.observe_witness(w.commit, 0);
        const auto theirs = txgraph::scrape_preimage(cw, params_->timeout_hash_of(w.committer));
        if (!theirs) return;
        auto mat = own_preimage();
        (w.committer == Role::Alice ? mat.preimage_a : mat.preimage_b) = *theirs;
        auto tx = b->exits->finalize_exit;
        txgraph::select_fast_finalize(tx);
        txgraph::fill_witnesses(tx, b->full.at(TemplateId::FinalizeExit), mat);
        if (submit(tx)) w.reacted = true;
        return;
    }
}

bool PeerEngine::try_punish(std::uint32_t m)
{
    if (!watch_ || !watch_->sig || funds_spent_) return false;
    const Role victim = watch_->committer;
    const auto [ci, pi] = punish_ids(victim);
    std::optional<crypto::CovenantSignature> commit_sig;
    std::optional<crypto::CovenantSignature> punish_sig;
    std::uint32_t threshold = 0;
    if (pending_ && pending_->state.esn > m && pending_->complete(ci) && pending_->complete(pi)) {
        threshold = pending_->state.esn;
        commit_sig = pending_->full.at(ci).at(0);
        punish_sig = pending_->full.at(pi).at(0);
    } else if (store_.present && store_.threshold > m) {
        threshold = store_.threshold;
        commit_sig = store_.commit;
        punish_sig = store_.punish;
    } else {
        return false;
    }
    auto pair = txgraph::build_punish_pair(txgraph::punish_template(*params_, victim, false),
                                           anchors_->disputes_against(victim), anchors_->funds, threshold);
    txgraph::fill_witnesses(pair.commit, {{0, *commit_sig}}, {});
    script::SigningMaterial mat;
    mat.ots = watch_->sig;
    txgraph::fill_witnesses(pair.punish, {{0, *punish_sig}}, mat);
    if (!submit_package({pair.commit, pair.punish})) return false;
    watch_->reacted = true;
    emit("punish", {{"victim", role_name(victim)}, {"esn", std::int64_t{m}}, {"threshold", std::int64_t{threshold}}});
    return true;
}

void PeerEngine::step_watch()
{
    if (!watch_ || watch_->reacted || funds_spent_) return;
    auto& w = *watch_;
    if (w.asserted) {
        if (w.m) try_punish(*w.m);
        return;
    }
    const auto h = chain_.confirmation_height(w.commit);
    if (!h || chain_.height() - *h < cfg_.T) return;
    const auto* commit = chain_.find(w.commit);
    const auto theirs =
        txgraph::scrape_preimage(chain_.observe_witness(w.commit, 0), params_->timeout_hash_of(w.committer));
    if (!commit || !theirs) return;
    auto tx = expire_set_.expire_of(w.committer);
    const auto& sigs = w.committer == Role::Alice ? expire_alice_sigs_ : expire_bob_sigs_;
    txgraph::retarget_expire(tx, {w.commit, 0}, commit->outputs[0].lock);
    script::SigningMaterial mat;
    (w.committer == Role::Alice ? mat.preimage_a : mat.preimage_b) = *theirs;
    txgraph::fill_witnesses(tx, sigs, mat);
    if (submit(tx)) {
        w.reacted = true;
        set_phase(Phase::TimedOutEnforcing);
    }
}

void PeerEngine::on_funds_spent(const Transaction& tx, const Txid& id)
{
    if (funds_spent_) return;
    funds_spent_ = id;
    outcome_.closed_by = tx.kind;
    using K = chain::TxKind;
    switch (tx.kind) {
    case K::PunishAlice: outcome_.punished = Role::Alice; break;
    case K::PunishBob: outcome_.punished = Role::Bob; break;
    case K::WTAPunish: outcome_.punished = Role::Bob; break;
    case K::WTBPunish: outcome_.punished = Role::Alice; break;
    case K::ExpireAliceExit: outcome_.expired = Role::Alice; break;
    case K::ExpireBobExit: outcome_.expired = Role::Bob; break;
    default: break;
    }
    emit("closed-by", {{"tx", tx.name}, {"kind", chain::tx_kind_name(tx.kind)}});
    close_.reset();
    ctx_.reset();
    if (tx.kind != K::FinalizeExit) return;

    std::vector<const txgraph::StateSnapshot*> states{&current_.state};
    if (pending_) states.push_back(&pending_->state);
    if (revoked_) states.push_back(&revoked_->state);
    for (const auto& b : history_) states.push_back(&b.state);
    for (std::uint32_t j = 0; j < tx.outputs.size(); ++j) {
        bool found = false;
        for (const auto* s : states) {
            for (const auto& h : s->htlcs) {
                if (h.amount != tx.outputs[j].amount || !(htlc::htlc_lock(h, params_->payout) == tx.outputs[j].lock))
                    continue;
                if (h.sender == role_ || h.receiver() == role_) htlc_tasks_.push_back({{id, j}, h});
                found = true;
                break;
            }
            if (found) break;
        }
    }
}

void PeerEngine::step_htlcs()
{
    std::erase_if(htlc_tasks_, [&](const HtlcTask& t) { return chain_.spender(t.at).has_value(); });
    for (const auto& t : htlc_tasks_) {
        const auto height = chain_.height();
        if (t.h.receiver() == role_) {
            auto it = preimages_.find(t.h.payment_hash);
            if (it == preimages_.end() || height >= t.h.expiry) continue;
            auto tx = htlc::build_claim(t.h, params_->payout, t.at, address());
            htlc::sign_claim(tx, payout_key_, it->second);
            submit(tx);
        } else if (height >= t.h.expiry) {
            auto tx = htlc::build_refund(t.h, params_->payout, t.at, address());
            htlc::sign_refund(tx, payout_key_);
            submit(tx);
        }
    }
}

// ---- level-2 tower feed --------------------------------------------------

void PeerEngine::step_tower()
{
    if (cfg_.privacy_level != 2 || !opts_.has_tower || !registered_ || funds_spent_) return;
    if (phase_ == Phase::Closed || now_ % cfg_.tower_interval != 0) return;
    Bytes plain;
    if (l2_plain_) {
        plain = *l2_plain_;
    } else {
        // Same size as a real report so the first one does not stand out.
        watchtower::L2Packet dummy;
        dummy.tmpl = txgraph::punish_template(*params_, other(role_), true);
        dummy.setup = setup_->txid();
        dummy.epsilon = params_->epsilon;
        dummy.nonce = params_->anchor_nonce;
        plain.resize(dummy.encode().size());
        rng_.fill(plain);
    }
    const auto packet = crypto::encrypt(p_e_.span(), plain, rng_.bytes<crypto::Iv>());
    watchtower::WireRecord r;
    r.channel = tower_handle_;
    r.level = 2;
    r.kind = watchtower::WireKind::Update;
    r.payload = packet.serialize();
    tower_outbox_.push_back(r.encode());
}

// ---- adversary -----------------------------------------------------------

void PeerEngine::adversary_act()
{
    act_pending_ = false;
    const auto action = opts_.cheat.action;
    emit("act", {{"action", adversary_action_name(action)}});
    if (action == AdversaryAction::Idle || !live_) return;
    const bool mid = ctx_.has_value();
    const StateBundle* old_state = mid ? &current_ : (revoked_ ? &*revoked_ : nullptr);
    const StateBundle* new_state = mid ? (pending_ && pending_->exit_ready() ? &*pending_ : nullptr) : &current_;
    const bool old_action = action == AdversaryAction::ExitOld || action == AdversaryAction::CommitOnlyOld;
    const auto* target = old_action ? old_state : new_state;
    if (!target || !target->exit_ready()) {
        emit("act-skipped", {{"action", adversary_action_name(action)}});
        return;
    }
    const StateBundle copy = *target;
    ctx_.reset();
    start_exit(copy, action == AdversaryAction::ExitOld || action == AdversaryAction::ExitNew);
}

// ---- submission ----------------------------------------------------------

bool PeerEngine::submit(const Transaction& tx)
{
    const auto r = chain_.submit(tx);
    if (r.accepted() || r.reason == chain::Reject::Duplicate) {
        if (r.accepted()) emit("publish", {{"tx", tx.name}, {"txid", short_id(r.txid)}});
        last_reject_.erase(tx.name);
        return true;
    }
    const std::string why = chain::reject_name(r.reason);
    auto& last = last_reject_[tx.name];
    if (last != why) emit("reject", {{"tx", tx.name}, {"reason", why}, {"detail", r.detail}});
    last = why;
    return false;
}

bool PeerEngine::submit_package(const std::vector<Transaction>& txs)
{
    const auto r = chain_.submit_package(txs);
    std::string names;
    for (const auto& t : txs) names += (names.empty() ? "" : "+") + t.name;
    if (r.accepted()) {
        emit("publish", {{"tx", names}, {"txid", short_id(r.txid)}});
        return true;
    }
    const std::string why = chain::reject_name(r.reason);
    auto& last = last_reject_[names];
    if (last != why) emit("reject", {{"tx", names}, {"reason", why}, {"detail", r.detail}});
    last = why;
    return false;
}

// ---- event loop ----------------------------------------------------------

void PeerEngine::tick(std::uint64_t now)
{
    now_ = now;
    for (const auto& m : std::exchange(inbox_, {})) handle(m);
    if (phase_ == Phase::Opening && setup_ && chain_.confirmed(setup_->txid())) on_open();
    process_chain();
    if (act_pending_) adversary_act();

    if (ctx_ && !halted_ && (phase_ == Phase::Handshake || phase_ == Phase::Updating) &&
        now_ - ctx_->last_progress > cfg_.step_timeout) {
        if (ctx_->setup) {
            emit("abort", {{"reason", "Timeout"}});
            ctx_.reset();
            set_phase(Phase::Aborted);
        } else {
            abort("Timeout");
        }
    }
    if (close_ && !funds_spent_ && !halted_) {
        const std::uint64_t limit = close_->requester ? cfg_.step_timeout : 2ull * cfg_.step_timeout;
        if (now_ - close_->started > limit) {
            emit("close-timeout", {{"isn", std::int64_t{close_->isn}}});
            close_.reset();
            unilateral_exit();
        }
    }
    step_exit();
    step_watch();
    step_htlcs();
    step_tower();
    if (funds_spent_ && phase_ != Phase::Closed && chain_.confirmed(*funds_spent_)) {
        plan_.reset();
        watch_.reset();
        set_phase(Phase::Closed);
    }
}

bool PeerEngine::busy() const
{
    if (!htlc_tasks_.empty()) return true;
    switch (phase_) {
    case Phase::Handshake:
    case Phase::Opening:
    case Phase::CoopClosing:
    case Phase::Disputing:
    case Phase::TimedOutEnforcing: return true;
    case Phase::Updating: return !halted_;
    case Phase::UnilateralExiting: return plan_ && plan_->stage != ExitPlan::Stage::Stalling;
    case Phase::Aborted: return close_.has_value() || plan_.has_value();
    default: return false;
    }
}

}  // namespace otspc::channel
