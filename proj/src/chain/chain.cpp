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

#include "otspc/chain/chain.hpp"

#include <json.hpp>

#include <set>

namespace otspc::chain {

const char* reject_name(Reject r)
{
    switch (r) {
    case Reject::None: return "Accepted";
    case Reject::MissingInput: return "MissingInput";
    case Reject::ScriptFailure: return "ScriptFailure";
    case Reject::Conflict: return "Conflict";
    case Reject::AmountOverflow: return "AmountOverflow";
    case Reject::SeqNotMatured: return "SeqNotMatured";
    case Reject::LocktimeNotReached: return "LocktimeNotReached";
    case Reject::Duplicate: return "Duplicate";
    case Reject::Unspendable: return "Unspendable";
    }
    return "?";
}

std::string SubmitResult::describe() const
{
    std::string s = reject_name(reason);
    if (!detail.empty()) s += "(" + detail + ")";
    return s;
}

Outpoint Chain::mint(Amount amount, script::OutputLock lock, std::string label)
{
    if (amount <= 0) throw Error(Errc::InvalidParams, "mint amount must be positive");
    Transaction tx;
    tx.name = std::move(label);
    tx.kind = TxKind::Funding;
    // Unique marker so identical mints get distinct txids.
    tx.outputs.push_back(TxOutput::data(encode_u64(mint_counter_++)));
    tx.outputs.push_back({amount, std::move(lock), std::nullopt});
    auto id = tx.txid();
    Record rec{tx, height_, height_, {}};
    txs_.emplace(id, std::move(rec));
    Outpoint op{id, 1};
    utxo_[op] = Coin{tx.outputs[1], height_};
    minted_ += amount;
    minted_txs_.push_back(id);
    accepted_.push_back(id);
    return op;
}

std::optional<Coin> Chain::lookup(const Outpoint& op, bool& spent) const
{
    spent = spent_.count(op) != 0 || mempool_spent_.count(op) != 0;
    if (spent) return std::nullopt;
    if (auto it = utxo_.find(op); it != utxo_.end()) return it->second;
    auto rec = txs_.find(op.txid);
    if (rec == txs_.end() || rec->second.height || op.index >= rec->second.tx.outputs.size()) return std::nullopt;
    return Coin{rec->second.tx.outputs[op.index], std::nullopt};
}

std::optional<Coin> Chain::coin(const Outpoint& op) const
{
    bool spent = false;
    return lookup(op, spent);
}

std::optional<Txid> Chain::spender(const Outpoint& op) const
{
    if (auto it = spent_.find(op); it != spent_.end()) return it->second;
    if (auto it = mempool_spent_.find(op); it != mempool_spent_.end()) return it->second;
    return std::nullopt;
}

SubmitResult Chain::check_and_add(const Transaction& tx)
{
    SubmitResult res;
    res.txid = tx.txid();
    auto fail = [&](Reject r, std::string detail) {
        res.reason = r;
        res.detail = std::move(detail);
        return res;
    };
    if (txs_.count(res.txid)) return fail(Reject::Duplicate, tx.name);
    if (tx.inputs.empty()) return fail(Reject::MissingInput, "no inputs");
    if (tx.locktime && *tx.locktime > height_) return fail(Reject::LocktimeNotReached, tx.name);

    std::set<Outpoint> seen;
    Amount in_total = 0;
    std::vector<std::uint32_t> confs;
    const auto sighash = tx.sighash();
    const auto op_returns = tx.op_returns();
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i) {
        const auto& in = tx.inputs[i];
        if (!seen.insert(in.prevout).second) return fail(Reject::Conflict, "input spent twice");
        bool spent = false;
        auto c = lookup(in.prevout, spent);
        if (spent) return fail(Reject::Conflict, in.prevout.str());
        if (!c) {
            auto rec = txs_.find(in.prevout.txid);
            if (rec != txs_.end() && in.prevout.index < rec->second.tx.outputs.size()
                && !rec->second.tx.outputs[in.prevout.index].spendable())
                return fail(Reject::Unspendable, in.prevout.str());
            return fail(Reject::MissingInput, in.prevout.str());
        }
        if (!c->output.spendable()) return fail(Reject::Unspendable, in.prevout.str());
        script::ExecContext ctx;
        ctx.sighash = sighash;
        ctx.input_index = i;
        ctx.height = height_;
        ctx.confirmations = c->height ? height_ - *c->height : 0;
        ctx.signers = signers_;
        ctx.op_returns = op_returns;
        auto r = script::verify_spend(c->output.lock.kind(), c->output.lock.commitment(), in.witness, ctx);
        if (!r.ok()) {
            auto detail = "input " + std::to_string(i) + ": " + r.describe();
            if (r.error == script::ScriptError::SeqNotMatured) return fail(Reject::SeqNotMatured, detail);
            if (r.error == script::ScriptError::LocktimeNotReached) return fail(Reject::LocktimeNotReached, detail);
            return fail(Reject::ScriptFailure, detail);
        }
        in_total += c->output.amount;
        confs.push_back(ctx.confirmations);
    }
    Amount out_total = 0;
    for (const auto& o : tx.outputs) {
        if (o.amount < 0 || (o.op_return && o.amount != 0)) return fail(Reject::AmountOverflow, "bad output amount");
        out_total += o.amount;
    }
    if (out_total > in_total)
        return fail(Reject::AmountOverflow, std::to_string(out_total) + " > " + std::to_string(in_total));

    for (const auto& in : tx.inputs) mempool_spent_[in.prevout] = res.txid;
    txs_.emplace(res.txid, Record{tx, std::nullopt, height_, std::move(confs)});
    mempool_.push_back(res.txid);
    accepted_.push_back(res.txid);
    return res;
}

SubmitResult Chain::submit(const Transaction& tx)
{
    auto r = check_and_add(tx);
    if (r.reason == Reject::Conflict) pending_drops_.emplace_back(r.txid, tx.name);
    return r;
}

SubmitResult Chain::submit_package(const std::vector<Transaction>& txs)
{
    auto saved_spent = mempool_spent_;
    auto saved_mempool = mempool_;
    auto saved_accepted = accepted_;
    std::vector<Txid> added;
    SubmitResult last;
    for (const auto& tx : txs) {
        last = check_and_add(tx);
        // Members already known are fine; the rest of the package still counts.
        if (last.reason == Reject::Duplicate) {
            last.reason = Reject::None;
            continue;
        }
        if (!last.accepted()) {
            for (const auto& id : added) txs_.erase(id);
            mempool_spent_ = std::move(saved_spent);
            mempool_ = std::move(saved_mempool);
            accepted_ = std::move(saved_accepted);
            if (last.reason == Reject::Conflict) pending_drops_.emplace_back(last.txid, tx.name);
            last.detail = tx.name + ": " + last.detail;
            return last;
        }
        added.push_back(last.txid);
    }
    return last;
}

std::uint32_t Chain::mine_blocks(std::uint32_t n)
{
    for (std::uint32_t b = 0; b < n; ++b) {
        ++height_;
        BlockRecord block;
        block.height = height_;
        for (const auto& id : mempool_) {
            auto& rec = txs_.at(id);
            rec.height = height_;
            for (const auto& in : rec.tx.inputs) {
                Amount amt = 0;
                if (auto it = utxo_.find(in.prevout); it != utxo_.end()) {
                    amt = it->second.output.amount;
                    utxo_.erase(it);
                }
                fees_ += amt;
                spent_[in.prevout] = id;
                mempool_spent_.erase(in.prevout);
            }
            for (std::uint32_t i = 0; i < rec.tx.outputs.size(); ++i) {
                const auto& o = rec.tx.outputs[i];
                fees_ -= o.amount;
                if (o.spendable()) utxo_[{id, i}] = Coin{o, height_};
            }
            block.confirmed.push_back(id);
        }
        mempool_.clear();
        block.dropped = std::move(pending_drops_);
        pending_drops_.clear();
        blocks_.push_back(std::move(block));
    }
    return height_;
}

const script::Witness& Chain::observe_witness(const Txid& txid, std::uint32_t input) const
{
    auto it = txs_.find(txid);
    if (it == txs_.end()) throw Error(Errc::UnknownTx, "unknown txid " + txid.hex());
    if (input >= it->second.tx.inputs.size()) throw Error(Errc::IndexOutOfRange, "input index");
    return it->second.tx.inputs[input].witness;
}

const Transaction* Chain::find(const Txid& txid) const
{
    auto it = txs_.find(txid);
    return it == txs_.end() ? nullptr : &it->second.tx;
}

std::optional<std::uint32_t> Chain::confirmation_height(const Txid& txid) const
{
    auto it = txs_.find(txid);
    if (it == txs_.end()) return std::nullopt;
    return it->second.height;
}

Amount Chain::utxo_total() const
{
    Amount total = 0;
    for (const auto& [op, c] : utxo_) total += c.output.amount;
    return total;
}

Amount Chain::balance_of(const script::OutputLock& lock) const
{
    Amount total = 0;
    for (const auto& [op, c] : utxo_)
        if (c.output.lock == lock) total += c.output.amount;
    return total;
}

std::vector<std::string> Chain::audit() const
{
    std::vector<std::string> problems;
    std::map<Outpoint, Coin> utxo;
    Amount minted = 0;
    Amount fees = 0;

    // Confirmed transactions in block order; mints first at their height.
    std::vector<const Record*> order;
    std::set<Txid> mints(minted_txs_.begin(), minted_txs_.end());
    for (const auto& id : accepted_) {
        const auto& rec = txs_.at(id);
        if (rec.height) order.push_back(&rec);
    }
    std::stable_sort(order.begin(), order.end(), [](const Record* a, const Record* b) { return *a->height < *b->height; });

    for (const auto* rec : order) {
        const auto& tx = rec->tx;
        auto id = tx.txid();
        if (mints.count(id)) {
            minted += tx.outputs[1].amount;
            utxo[{id, 1}] = Coin{tx.outputs[1], rec->height};
            continue;
        }
        Amount in_total = 0;
        const auto sighash = tx.sighash();
        const auto op_returns = tx.op_returns();
        for (std::uint32_t i = 0; i < tx.inputs.size(); ++i) {
            const auto& in = tx.inputs[i];
            auto it = utxo.find(in.prevout);
            if (it == utxo.end()) {
                problems.push_back(tx.name + ": spends missing or spent " + in.prevout.str());
                continue;
            }
            script::ExecContext ctx;
            ctx.sighash = sighash;
            ctx.input_index = i;
            ctx.height = rec->accepted_at;
            ctx.confirmations = i < rec->confirmations.size() ? rec->confirmations[i] : 0;
            ctx.signers = signers_;
            ctx.op_returns = op_returns;
            auto r = script::verify_spend(it->second.output.lock.kind(), it->second.output.lock.commitment(),
                                          in.witness, ctx);
            if (!r.ok()) problems.push_back(tx.name + ": script " + r.describe());
            in_total += it->second.output.amount;
            utxo.erase(it);
        }
        Amount out_total = tx.output_total();
        if (out_total > in_total) problems.push_back(tx.name + ": creates value");
        fees += in_total - out_total;
        for (std::uint32_t i = 0; i < tx.outputs.size(); ++i)
            if (tx.outputs[i].spendable()) utxo[{id, i}] = Coin{tx.outputs[i], rec->height};
    }

    Amount total = 0;
    for (const auto& [op, c] : utxo) total += c.output.amount;
    if (utxo.size() != utxo_.size()) problems.push_back("replayed UTXO set size differs");
    for (const auto& [op, c] : utxo)
        if (!utxo_.count(op)) problems.push_back("replayed UTXO missing live entry " + op.str());
    if (total + fees != minted) problems.push_back("value not conserved");
    if (minted != minted_ || fees != fees_) problems.push_back("ledger totals disagree with replay");
    return problems;
}

crypto::Hash256 Chain::state_digest() const
{
    ByteWriter w;
    w.u32(height_);
    for (const auto& [op, c] : utxo_) {
        w.fixed(op.txid);
        w.u32(op.index);
        w.i64(c.output.amount);
        w.raw(c.output.lock.serialize());
        w.u32(c.height.value_or(0));
    }
    for (const auto& id : mempool_) w.fixed(id);
    return crypto::sha256(w.bytes());
}

std::string Chain::event_log() const
{
    std::string out;
    for (const auto& b : blocks_) {
        nlohmann::ordered_json j;
        j["height"] = b.height;
        auto confirmed = nlohmann::ordered_json::array();
        for (const auto& id : b.confirmed) {
            nlohmann::ordered_json e;
            e["name"] = txs_.at(id).tx.name;
            e["txid"] = id.hex();
            confirmed.push_back(e);
        }
        j["confirmed"] = confirmed;
        auto dropped = nlohmann::ordered_json::array();
        for (const auto& [id, name] : b.dropped) {
            nlohmann::ordered_json e;
            e["name"] = name;
            e["txid"] = id.hex();
            dropped.push_back(e);
        }
        j["dropped"] = dropped;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace otspc::chain
