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
#include "otspc/watchtower/wire.hpp"

#include <map>

namespace otspc::watchtower {

struct TowerConfig {
    int level = 1;
    /// The party whose channel this tower defends.
    Role client = Role::Alice;
    /// Works for the counterparty: burns the dispute output with the oldest
    /// stale CommitPunish as soon as an exit shows up.
    bool collude = false;
    /// Retain every pair received instead of only the latest one.
    bool keep_history = false;
};

/// One watchtower serving any number of channels of one client.
class Tower {
public:
    Tower(TowerConfig cfg, chain::Chain& chain);

    /// Throws Malformed, or UnknownChannel for an update before its register.
    void ingest(ByteSpan wire, std::uint64_t tick);
    /// Scans new chain activity and broadcasts what it can.
    void on_tick(std::uint64_t tick);

    /// Bytes held for `channel`, history excluded.
    std::size_t record_size(const crypto::Hash256& channel) const;
    std::size_t channels() const { return l1_.size() + l2_.size() + l3_.size(); }
    const TowerConfig& config() const { return cfg_; }
    void set_collude(bool on) { cfg_.collude = on; }

    /// Last pair rebuilt from decrypted material.
    const std::optional<txgraph::PunishPair>& last_rebuilt() const { return rebuilt_; }
    /// Hash steps spent walking the key chain for the last level-3 dispute.
    std::optional<std::uint32_t> last_derivations() const { return derivations_; }
    const std::vector<chain::Txid>& published() const { return published_; }
    std::vector<std::string> take_log();

private:
    struct L1Record {
        chain::Txid setup;
        txgraph::PunishTemplate tmpl;
        bool shared = false;
        std::optional<SignedPair> pair;
        std::vector<SignedPair> history;
        std::optional<chain::Txid> commit;
        bool done = false;
    };
    struct L2Record {
        std::optional<crypto::CipherPacket> packet;
        std::uint64_t last_tick = 0;
        bool done = false;
    };
    struct L3Record {
        txgraph::PunishTemplate tmpl;
        std::optional<L3Update> key;
        std::optional<chain::Txid> commit;
        std::uint32_t committed_esn = 0;
        std::optional<txgraph::PunishPair> pair;
        std::optional<L3Slot> slot;
        bool done = false;
    };

    void scan(const chain::Txid& id, const chain::Transaction& tx);
    void scan_l1(const chain::Txid& id, const chain::Transaction& tx);
    void scan_l2(const chain::Txid& id, const chain::Transaction& tx);
    void scan_l3(const chain::Txid& id, const chain::Transaction& tx);
    /// OTS value signed by the victim in the assert spending `commit`:0, if `tx` is that assert.
    std::optional<std::pair<std::uint32_t, crypto::OTSignature>> assert_value(
        const chain::Txid& id, const chain::Transaction& tx, const chain::Txid& commit,
        const crypto::OTPublicKey& victim) const;
    txgraph::Anchor anchor_at(const chain::Transaction& tx, const chain::Outpoint& at) const;
    bool broadcast(const std::string& channel, std::vector<chain::Transaction> txs);
    void log(const std::string& event, const std::string& channel, const std::string& detail = {});

    TowerConfig cfg_;
    chain::Chain& chain_;
    std::uint64_t now_ = 0;
    std::size_t cursor_ = 0;
    std::map<crypto::Hash256, L1Record> l1_;
    std::map<crypto::Hash256, L2Record> l2_;
    std::map<crypto::Hash256, L3Record> l3_;
    std::optional<txgraph::PunishPair> rebuilt_;
    std::optional<std::uint32_t> derivations_;
    std::vector<chain::Txid> published_;
    std::vector<std::string> log_;
};

}  // namespace otspc::watchtower
