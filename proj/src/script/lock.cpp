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

#include "otspc/script/lock.hpp"

namespace otspc::script {

namespace {

crypto::Hash256 tree_commitment(const std::vector<crypto::Hash256>& hashes)
{
    ByteWriter w;
    w.fixed(nums_key());
    for (const auto& h : hashes) w.fixed(h);
    return crypto::tagged_hash("otspc/taptree", w.bytes());
}

crypto::Hash256 script_commitment(const Script& script)
{
    return crypto::tagged_hash("otspc/scripthash", serialize(script));
}

}  // namespace

Bytes Witness::serialize() const
{
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(stack.size()));
    for (const auto& item : stack) w.var(item);
    w.raw(script::serialize(script));
    w.u32(leaf_index);
    w.u32(static_cast<std::uint32_t>(control.size()));
    for (const auto& h : control) w.fixed(h);
    return std::move(w).bytes();
}

Witness Witness::deserialize(ByteReader& in)
{
    Witness wit;
    auto n = in.u32();
    if (n > 1000) throw Error(Errc::Malformed, "witness stack too large");
    for (std::uint32_t i = 0; i < n; ++i) wit.stack.push_back(in.var());
    wit.script = deserialize_script(in);
    wit.leaf_index = in.u32();
    auto c = in.u32();
    if (c > 1000) throw Error(Errc::Malformed, "control too large");
    for (std::uint32_t i = 0; i < c; ++i) wit.control.push_back(in.fixed<32, crypto::Hash256Tag>());
    return wit;
}

crypto::Hash256 leaf_hash(const Script& script)
{
    return crypto::tagged_hash("otspc/tapleaf", serialize(script));
}

const crypto::Hash256& nums_key()
{
    static const crypto::Hash256 key = crypto::sha256(as_bytes("otspc/nums-internal-key"));
    return key;
}

OutputLock OutputLock::script_hash(Script script)
{
    OutputLock lock;
    lock.kind_ = LockKind::ScriptHash;
    lock.commitment_ = script_commitment(script);
    lock.leaves_.push_back(std::move(script));
    return lock;
}

OutputLock OutputLock::tap_tree(std::vector<Script> leaves)
{
    if (leaves.empty()) throw Error(Errc::InvalidParams, "tree needs at least one leaf");
    OutputLock lock;
    lock.kind_ = LockKind::TapTree;
    std::vector<crypto::Hash256> hashes;
    for (const auto& s : leaves) hashes.push_back(leaf_hash(s));
    lock.commitment_ = tree_commitment(hashes);
    lock.leaves_ = std::move(leaves);
    return lock;
}

const Script& OutputLock::reveal(std::size_t leaf) const
{
    if (leaf >= leaves_.size()) throw Error(Errc::LeafNotInTree, "leaf index " + std::to_string(leaf));
    return leaves_[leaf];
}

std::size_t OutputLock::index_of(const Script& script) const
{
    for (std::size_t i = 0; i < leaves_.size(); ++i)
        if (leaves_[i] == script) return i;
    throw Error(Errc::LeafNotInTree, "script is not a leaf of this lock");
}

Witness OutputLock::witness(std::size_t leaf, std::vector<Bytes> stack) const
{
    Witness w;
    w.stack = std::move(stack);
    w.script = reveal(leaf);
    w.leaf_index = static_cast<std::uint32_t>(leaf);
    if (kind_ == LockKind::TapTree)
        for (const auto& s : leaves_) w.control.push_back(leaf_hash(s));
    return w;
}

Bytes OutputLock::serialize() const
{
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(kind_));
    w.fixed(commitment_);
    return std::move(w).bytes();
}

OutputLock OutputLock::deserialize(ByteReader& in)
{
    OutputLock lock;
    auto kind = in.u8();
    if (kind != static_cast<std::uint8_t>(LockKind::ScriptHash) && kind != static_cast<std::uint8_t>(LockKind::TapTree))
        throw Error(Errc::Malformed, "unknown lock kind");
    lock.kind_ = static_cast<LockKind>(kind);
    lock.commitment_ = in.fixed<32, crypto::Hash256Tag>();
    return lock;
}

OutputLock lock_of(std::vector<Script> scripts)
{
    if (scripts.empty()) throw Error(Errc::InvalidParams, "lock needs at least one script");
    if (scripts.size() == 1) return OutputLock::script_hash(std::move(scripts.front()));
    return OutputLock::tap_tree(std::move(scripts));
}

bool witness_matches(LockKind kind, const crypto::Hash256& commitment, const Witness& witness)
{
    if (kind == LockKind::ScriptHash) return witness.control.empty() && script_commitment(witness.script) == commitment;
    if (witness.leaf_index >= witness.control.size()) return false;
    if (witness.control[witness.leaf_index] != leaf_hash(witness.script)) return false;
    return tree_commitment(witness.control) == commitment;
}

ExecResult verify_spend(LockKind kind, const crypto::Hash256& commitment, const Witness& witness,
                        const ExecContext& ctx)
{
    if (!witness_matches(kind, commitment, witness)) return {ScriptError::HashMismatch, 0, "COMMITMENT"};
    return execute(witness.script, witness.stack, ctx);
}

const char* slot_name(Slot s)
{
    switch (s) {
    case Slot::CovenantSig: return "covenant_sig";
    case Slot::OtsSig: return "ots_sig";
    case Slot::PreimageA: return "preimage_a";
    case Slot::PreimageB: return "preimage_b";
    case Slot::PreimageE: return "preimage_e";
    case Slot::PaymentPreimage: return "payment_preimage";
    case Slot::SingleSig: return "single_sig";
    case Slot::BranchTrue: return "branch_true";
    case Slot::BranchFalse: return "branch_false";
    }
    return "?";
}

std::vector<Bytes> build_stack(const PathDescriptor& path, const SigningMaterial& m)
{
    std::vector<Bytes> stack;
    auto need = [](const auto& opt, Slot s) -> const auto& {
        if (!opt) throw Error(Errc::MissingItem, std::string("witness slot ") + slot_name(s) + " not supplied");
        return *opt;
    };
    auto push_span = [&](ByteSpan b) { stack.emplace_back(b.begin(), b.end()); };
    for (auto s : path.slots) {
        switch (s) {
        case Slot::CovenantSig: push_span(need(m.covenant, s).span()); break;
        case Slot::OtsSig: stack.push_back(need(m.ots, s).serialize()); break;
        case Slot::PreimageA: push_span(need(m.preimage_a, s).span()); break;
        case Slot::PreimageB: push_span(need(m.preimage_b, s).span()); break;
        case Slot::PreimageE: push_span(need(m.preimage_e, s).span()); break;
        case Slot::PaymentPreimage: push_span(need(m.payment, s).span()); break;
        case Slot::SingleSig: push_span(need(m.single, s).span()); break;
        case Slot::BranchTrue: stack.push_back(encode_bool(true)); break;
        case Slot::BranchFalse: stack.push_back(encode_bool(false)); break;
        }
    }
    return stack;
}

Witness build_witness_for(const OutputLock& lock, const PathDescriptor& path, const SigningMaterial& material)
{
    return lock.witness(path.leaf, build_stack(path, material));
}

}  // namespace otspc::script
