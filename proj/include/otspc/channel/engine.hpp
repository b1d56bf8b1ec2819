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

#include "otspc/chain/chain.hpp"
#include "otspc/channel/messages.hpp"
#include "otspc/channel/sequence.hpp"
#include "otspc/crypto/hashchain.hpp"
#include "otspc/crypto/rng.hpp"

#include <set>
#include <variant>

namespace otspc::channel {

/// Agreed by both parties before the handshake.
struct ChannelConfig {
    Amount i_bal = 100000;
    Amount epsilon = 1000;
    std::uint32_t T = 6;
    int privacy_level = 1;
    bool separate_wt_outputs = true;
    Amount tower_reward = 500;
    Amount fee_commitment = 0;
    crypto::OTParams ot;
    /// Level 2 only: every stride-th state is reported to the towers.
    std::uint32_t report_stride = 4;
    std::uint32_t max_gap = 16;
    /// Level 3 key chain length M.
    std::uint32_t key_chain_length = 1u << 16;
    /// Ticks without progress before an update or close attempt is abandoned.
    std::uint32_t step_timeout = 10;
    /// Level 2 send period, in ticks.
    std::uint32_t tower_interval = 1;
    Amount close_fee = 0;

    /// Throws InvalidParams.
    void validate() const;
};

enum class AdversaryAction : std::uint8_t { Idle, ExitOld, ExitNew, CommitOnlyOld, CommitOnlyNew };

const char* adversary_action_name(AdversaryAction a);
std::optional<AdversaryAction> parse_adversary_action(std::string_view name);

/// Misbehaviour switches for adversarial actors. All off for an honest party.
struct CheatConfig {
    /// Withhold every message of the update protocol past this step and then
    /// play `action` on chain.
    std::optional<std::uint8_t> halt_after_step;
    AdversaryAction action = AdversaryAction::Idle;
    /// Keep every past state's signatures so stale states can be published.
    bool keep_history = false;
};

struct EngineOptions {
    bool has_tower = false;
    /// Where this party's tower gets its reward.
    std::optional<script::OutputLock> tower_address;
    CheatConfig cheat;
};

enum class Phase : std::uint8_t {
    Init,
    Handshake,
    Opening,
    Open,
    Updating,
    CoopClosing,
    UnilateralExiting,
    Disputing,
    TimedOutEnforcing,
    Closed,
    Aborted,
};

const char* phase_name(Phase p);

/// Signed counterparty punishment material for exactly one state.
struct PunishStore {
    bool present = false;
    std::uint32_t isn = 0;
    /// Asserts strictly below this ESN are punishable.
    std::uint32_t threshold = 0;
    crypto::CovenantSignature commit;
    crypto::CovenantSignature punish;

    Bytes serialize() const;
};

/// One state's templates and who has signed what.
struct StateBundle {
    txgraph::StateSnapshot state;
    Bytes payload;
    std::optional<txgraph::ExitSet> exits;
    std::optional<txgraph::PunishSet> punish;
    std::optional<txgraph::PunishPair> wta;
    std::optional<txgraph::PunishPair> wtb;
    /// WTDisputes or StartExit; state 0 only.
    std::optional<chain::Transaction> anchor;
    std::map<std::pair<TemplateId, std::uint8_t>, crypto::PartialSignature> mine;
    std::map<std::pair<TemplateId, std::uint8_t>, crypto::PartialSignature> theirs;
    std::map<TemplateId, txgraph::SigSet> full;

    /// Throws ProtocolViolation for a template this state does not have.
    const chain::Transaction& tx(TemplateId id) const;
    bool has(TemplateId id) const;
    /// Every path the template needs is aggregated.
    bool complete(TemplateId id) const;
    /// Commit, assert and finalize are all fully signed.
    bool exit_ready() const;
};

struct Outcome {
    std::optional<chain::TxKind> closed_by;
    std::optional<Role> punished;
    std::optional<Role> expired;
};

class PeerEngine {
public:
    PeerEngine(Role role, ChannelConfig cfg, std::uint64_t seed, chain::Chain& chain,
               crypto::SignerRegistry& registry, EngineOptions options = {});

    Role role() const { return role_; }
    Phase phase() const { return phase_; }
    const ChannelConfig& config() const { return cfg_; }

    // ---- commands ----
    /// Lock the simulation must mint funding to.
    script::OutputLock funding_lock() const;
    /// Payout address, known before the handshake.
    script::OutputLock address() const;
    void fund(const chain::Outpoint& at, Amount amount, Amount deposit);
    /// Alice opens the handshake.
    void start_setup();
    /// Throws InvalidParams, InsufficientBalance and friends when the
    /// update cannot apply to the current state.
    void propose(const UpdateOp& op);
    void cooperative_close();
    void unilateral_exit();
    /// Publishes an old state's exit. Needs keep_history for anything but
    /// the current state.
    void cheat_exit(std::uint32_t isn, bool assert_state, std::uint32_t assert_delay = 0);
    void learn_preimage(const crypto::Preimage& p);
    void set_cheat(const CheatConfig& cheat);

    // ---- event loop ----
    void deliver(const Message& m);
    void tick(std::uint64_t now);
    std::vector<Message> take_messages();
    std::vector<Bytes> take_tower_records();
    std::vector<std::string> take_log();

    // ---- inspection ----
    bool busy() const;
    bool halted() const { return halted_; }
    const txgraph::StateSnapshot& state() const;
    const txgraph::ChannelParams& params() const;
    const txgraph::ChannelAnchors& anchors() const;
    const chain::Transaction& setup_tx() const;
    const PunishStore& punish_store() const { return store_; }
    /// Bytes of signature material retained for the live channel.
    std::size_t storage_bytes() const;
    const SequenceManager& sequence() const;
    const StateBundle* bundle(std::uint32_t isn) const;
    const crypto::OTPublicKey& ots_public() const { return ots_.public_key(); }
    const Outcome& outcome() const { return outcome_; }
    bool channel_live() const { return live_; }

private:
    struct UpdateCtx {
        bool setup = false;
        UpdateOp op;
        Role payer = Role::Alice;
        std::uint32_t isn = 0;
        std::set<int> sent;
        std::set<int> got;
        std::uint64_t last_progress = 0;
        bool slots_done = false;
        std::optional<crypto::CipherPacket> slot_a;
        std::optional<crypto::CipherPacket> slot_b;
    };
    struct ExitPlan {
        StateBundle bundle;
        bool assert_state = true;
        /// Blocks the commit must sit confirmed before the assert goes out.
        std::uint32_t assert_delay = 0;
        enum class Stage { StartExit, Commit, Assert, AwaitFinalize, Stalling, Done } stage = Stage::Commit;
        std::optional<chain::Txid> commit;
        std::optional<chain::Txid> asserted;
    };
    struct Watch {
        chain::Txid commit;
        Role committer = Role::Alice;
        std::optional<std::uint32_t> esn;
        bool asserted = false;
        bool reacted = false;
        std::optional<std::uint32_t> m;
        std::optional<crypto::OTSignature> sig;
    };
    struct HtlcTask {
        chain::Outpoint at;
        htlc::Htlc h;
    };
    struct CloseCtx {
        std::uint32_t isn = 0;
        bool requester = false;
        std::uint64_t started = 0;
        std::optional<chain::Transaction> tx;
    };

    // messaging
    void handle(const Message& m);
    void send(Message m, int protocol_step);
    using Field = std::pair<std::string, std::variant<std::int64_t, std::string, bool>>;
    void emit(const std::string& event, std::vector<Field> fields = {});
    void set_phase(Phase p);

    // setup
    void on_hello(const Message& m);
    void build_channel();
    PeerInfo my_info() const;
    std::vector<TemplateId> setup_ids() const;
    void advance_setup();
    void on_open();

    // updates
    const PeerInfo& info(Role r) const;
    StateBundle make_bundle(const txgraph::StateSnapshot& s) const;
    void attach_exits(StateBundle& b) const;
    void aggregate(StateBundle& b, TemplateId id, std::uint8_t path) const;
    std::vector<NamedPartial> sign(StateBundle& b, const std::vector<TemplateId>& ids);
    bool accept(StateBundle& b, const std::vector<NamedPartial>& parts, const std::vector<TemplateId>& allowed);
    StateBundle& building();
    std::vector<TemplateId> step_ids(int step) const;
    void on_propose(const Message& m);
    void on_slot(const Message& m);
    void on_sigs(const Message& m);
    void on_key_reveal(const Message& m);
    void on_abort(const Message& m);
    bool gate(int protocol_step);
    void advance();
    void complete_update();
    void abort(const std::string& reason, bool notify = true);
    crypto::CipherPacket make_slot(const StateBundle& b, Role client);
    void finish_slots(StateBundle& b);
    void tower_handoff(const StateBundle& prev);

    // close
    void on_close_request(const Message& m);
    void on_close_sigs(const Message& m);
    const StateBundle& exit_choice() const;

    // chain
    void process_chain();
    void on_exit_anchor_spent(const chain::Transaction& tx, const chain::Txid& id, std::uint32_t input);
    void on_commit_output_spent(const chain::Txid& id, std::uint32_t input);
    void on_funds_spent(const chain::Transaction& tx, const chain::Txid& id);
    void step_exit();
    void step_watch();
    void step_htlcs();
    void step_tower();
    void start_exit(const StateBundle& b, bool assert_state, std::uint32_t assert_delay = 0);
    void adversary_act();
    std::optional<std::uint32_t> find_committed_esn(const chain::Transaction& commit) const;
    bool try_punish(std::uint32_t m);
    bool submit(const chain::Transaction& tx);
    bool submit_package(const std::vector<chain::Transaction>& txs);
    script::SigningMaterial own_preimage() const;

    Role role_;
    ChannelConfig cfg_;
    EngineOptions opts_;
    chain::Chain& chain_;
    crypto::SignerRegistry& registry_;
    crypto::Rng rng_;
    crypto::SigningKey cov_key_;
    crypto::SigningKey payout_key_;
    crypto::SigningKey funding_key_;
    crypto::Preimage timeout_preimage_;
    crypto::OTKeyPair ots_;
    crypto::Hash256 chain_seed_;

    Phase phase_ = Phase::Init;
    std::uint64_t now_ = 0;
    bool live_ = false;
    bool halted_ = false;
    bool act_pending_ = false;
    /// Our signatures already let the peer punish the current state.
    bool revoked_self_ = false;
    std::optional<chain::Txid> funds_spent_;
    std::map<std::string, std::string> last_reject_;

    std::optional<txgraph::FundingSource> funding_;
    std::optional<PeerInfo> mine_;
    std::optional<PeerInfo> theirs_;
    std::optional<txgraph::ChannelParams> params_;
    std::optional<chain::Transaction> setup_;
    std::optional<txgraph::ChannelAnchors> anchors_;
    std::optional<SequenceManager> seq_;
    std::optional<crypto::HashChain> key_chain_;
    crypto::Preimage p_e_;
    std::optional<crypto::SingleSignature> their_funding_sig_;

    StateBundle current_;
    std::optional<StateBundle> pending_;
    std::optional<StateBundle> revoked_;
    std::vector<StateBundle> history_;
    PunishStore store_;
    txgraph::ExitSet expire_set_;
    txgraph::SigSet expire_alice_sigs_;
    txgraph::SigSet expire_bob_sigs_;
    std::optional<crypto::CovenantSignature> anchor_sig_;

    std::optional<UpdateCtx> ctx_;
    std::optional<CloseCtx> close_;
    std::optional<ExitPlan> plan_;
    std::optional<Watch> watch_;
    std::vector<HtlcTask> htlc_tasks_;
    std::map<crypto::Hash160, crypto::Preimage> preimages_;
    std::set<std::pair<int, std::uint32_t>> seen_;

    // towers
    bool registered_ = false;
    crypto::Hash256 tower_handle_;
    std::optional<Bytes> l2_plain_;

    std::size_t cursor_ = 0;
    Outcome outcome_;
    std::vector<Message> outbox_;
    std::vector<Bytes> tower_outbox_;
    std::vector<std::string> log_;
    std::vector<Message> inbox_;
};

}  // namespace otspc::channel
