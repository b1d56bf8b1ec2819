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

#include <map>
#include <string>
#include <vector>

namespace otspc::chain {

enum class Reject {
    None,
    MissingInput,
    ScriptFailure,
    Conflict,
    AmountOverflow,
    SeqNotMatured,
    LocktimeNotReached,
    Duplicate,
    Unspendable,
};

const char* reject_name(Reject r);

struct SubmitResult {
    Reject reason = Reject::None;
    std::string detail;
    Txid txid;

    bool accepted() const { return reason == Reject::None; }
    std::string describe() const;
};

struct Coin {
    TxOutput output;
    /// nullopt while the creating transaction sits in the mempool.
    std::optional<std::uint32_t> height;
};

struct BlockRecord {
    std::uint32_t height = 0;
    std::vector<Txid> confirmed;
    /// First-seen losers rejected since the previous block.
    std::vector<std::pair<Txid, std::string>> dropped;
};

/// Simulated ledger. Heights start at 0; a coin confirmed at height h has
/// tip - h confirmations and a mempool coin has 0.
class Chain {
public:
    explicit Chain(const crypto::SignerRegistry* signers) : signers_(signers) {}

    /// Creates a confirmed output out of thin air (test funding).
    Outpoint mint(Amount amount, script::OutputLock lock, std::string label = "mint");

    SubmitResult submit(const Transaction& tx);
    /// All or nothing; members may spend each other in order.
    SubmitResult submit_package(const std::vector<Transaction>& txs);

    /// Confirms the mempool (in submission order) in the first new block.
    std::uint32_t mine_blocks(std::uint32_t n);
    std::uint32_t height() const { return height_; }

    /// Throws UnknownTx.
    const script::Witness& observe_witness(const Txid& txid, std::uint32_t input) const;
    const Transaction* find(const Txid& txid) const;
    bool known(const Txid& txid) const { return txs_.count(txid) != 0; }
    std::optional<std::uint32_t> confirmation_height(const Txid& txid) const;
    bool confirmed(const Txid& txid) const { return confirmation_height(txid).has_value(); }
    std::optional<Coin> coin(const Outpoint& op) const;
    bool unspent(const Outpoint& op) const { return coin(op).has_value(); }
    /// Spender of an outpoint, confirmed or pending.
    std::optional<Txid> spender(const Outpoint& op) const;

    /// Every accepted transaction in acceptance order; observers keep a cursor.
    const std::vector<Txid>& accepted() const { return accepted_; }
    std::vector<Txid> mempool() const { return mempool_; }
    const std::vector<BlockRecord>& blocks() const { return blocks_; }

    Amount minted_total() const { return minted_; }
    Amount fees_total() const { return fees_; }
    Amount utxo_total() const;
    /// Confirmed value locked under `lock`.
    Amount balance_of(const script::OutputLock& lock) const;

    /// Replays every confirmed transaction from scratch: no missing or
    /// double spends, amounts conserve, scripts pass, and the replayed UTXO
    /// set equals the live one. Returns the list of violations.
    std::vector<std::string> audit() const;
    crypto::Hash256 state_digest() const;

    /// One JSON object per block: height, confirmed, dropped.
    std::string event_log() const;

    const crypto::SignerRegistry* signers() const { return signers_; }

private:
    struct Record {
        Transaction tx;
        std::optional<std::uint32_t> height;
        std::uint32_t accepted_at = 0;
        std::vector<std::uint32_t> confirmations;
    };

    SubmitResult check_and_add(const Transaction& tx);
    std::optional<Coin> lookup(const Outpoint& op, bool& spent) const;

    const crypto::SignerRegistry* signers_;
    std::uint32_t height_ = 0;
    std::uint64_t mint_counter_ = 0;
    std::map<Txid, Record> txs_;
    std::map<Outpoint, Coin> utxo_;
    std::map<Outpoint, Txid> spent_;
    std::map<Outpoint, Txid> mempool_spent_;
    std::vector<Txid> mempool_;
    std::vector<Txid> accepted_;
    std::vector<Txid> minted_txs_;
    std::vector<BlockRecord> blocks_;
    std::vector<std::pair<Txid, std::string>> pending_drops_;
    Amount minted_ = 0;
    Amount fees_ = 0;
};

}  // namespace otspc::chain
