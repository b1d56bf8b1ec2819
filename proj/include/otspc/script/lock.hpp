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

#include "otspc/crypto/cipher.hpp"
#include "otspc/script/interpreter.hpp"

#include <optional>

namespace otspc::script {

enum class LockKind : std::uint8_t { ScriptHash = 1, TapTree = 2 };

/// Data needed to spend an output: the stack, the revealed script and,
/// for trees, the leaf position plus every leaf hash so the verifier can
/// recompute the commitment.
struct Witness {
    std::vector<Bytes> stack;
    Script script;
    std::uint32_t leaf_index = 0;
    std::vector<crypto::Hash256> control;

    Bytes serialize() const;
    static Witness deserialize(ByteReader& in);

    friend bool operator==(const Witness&, const Witness&) = default;
};

crypto::Hash256 leaf_hash(const Script& script);

/// Unspendable internal key for trees: nobody knows its discrete log.
const crypto::Hash256& nums_key();

class OutputLock {
public:
    OutputLock() = default;

    static OutputLock script_hash(Script script);
    /// Throws InvalidParams on an empty list.
    static OutputLock tap_tree(std::vector<Script> leaves);

    LockKind kind() const { return kind_; }
    const crypto::Hash256& commitment() const { return commitment_; }
    std::size_t leaf_count() const { return leaves_.size(); }
    const std::vector<Script>& leaves() const { return leaves_; }

    /// Throws LeafNotInTree for an index past the end.
    const Script& reveal(std::size_t leaf) const;
    /// Throws LeafNotInTree if `script` is not one of the leaves.
    std::size_t index_of(const Script& script) const;

    /// Fills in script, leaf index and control for `stack`.
    Witness witness(std::size_t leaf, std::vector<Bytes> stack) const;

    /// Commitment-only identity (what appears on chain).
    Bytes serialize() const;
    /// Reads serialize() output. The result can be paid to, not spent from.
    static OutputLock deserialize(ByteReader& in);

    friend bool operator==(const OutputLock& a, const OutputLock& b)
    {
        return a.kind_ == b.kind_ && a.commitment_ == b.commitment_;
    }

private:
    LockKind kind_ = LockKind::ScriptHash;
    crypto::Hash256 commitment_;
    std::vector<Script> leaves_;
};

OutputLock lock_of(std::vector<Script> scripts);

/// The revealed script matches the commitment (ignores the stack).
bool witness_matches(LockKind kind, const crypto::Hash256& commitment, const Witness& witness);

/// Commitment check followed by execution.
ExecResult verify_spend(LockKind kind, const crypto::Hash256& commitment, const Witness& witness,
                        const ExecContext& ctx);

enum class Slot : std::uint8_t {
    CovenantSig,
    OtsSig,
    PreimageA,
    PreimageB,
    PreimageE,
    PaymentPreimage,
    SingleSig,
    BranchTrue,
    BranchFalse,
};

const char* slot_name(Slot s);

/// Names the witness items of a spend path, bottom of the stack first.
struct PathDescriptor {
    std::uint32_t leaf = 0;
    std::optional<std::uint8_t> covenant_path;
    std::vector<Slot> slots;

    friend bool operator==(const PathDescriptor&, const PathDescriptor&) = default;
};

struct SigningMaterial {
    std::optional<crypto::CovenantSignature> covenant;
    std::optional<crypto::OTSignature> ots;
    std::optional<crypto::Preimage> preimage_a;
    std::optional<crypto::Preimage> preimage_b;
    std::optional<crypto::Preimage> preimage_e;
    std::optional<crypto::Preimage> payment;
    std::optional<crypto::SingleSignature> single;
};

/// Throws MissingItem naming the first unfilled slot.
std::vector<Bytes> build_stack(const PathDescriptor& path, const SigningMaterial& material);
Witness build_witness_for(const OutputLock& lock, const PathDescriptor& path, const SigningMaterial& material);

}  // namespace otspc::script
