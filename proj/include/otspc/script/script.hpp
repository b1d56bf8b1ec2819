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

#include "otspc/crypto/covenant.hpp"
#include "otspc/crypto/ots.hpp"

#include <string>
#include <variant>
#include <vector>

namespace otspc::script {

namespace op {

struct PushBytes {
    Bytes data;
    friend bool operator==(const PushBytes&, const PushBytes&) = default;
};
struct PushInt {
    std::uint32_t value = 0;
    friend bool operator==(const PushInt&, const PushInt&) = default;
};
struct Dup {
    friend bool operator==(const Dup&, const Dup&) = default;
};
struct If {
    friend bool operator==(const If&, const If&) = default;
};
struct Else {
    friend bool operator==(const Else&, const Else&) = default;
};
struct EndIf {
    friend bool operator==(const EndIf&, const EndIf&) = default;
};
struct Verify {
    friend bool operator==(const Verify&, const Verify&) = default;
};
/// a b -> (a < b), b on top.
struct LessThan {
    friend bool operator==(const LessThan&, const LessThan&) = default;
};
/// Pops a covenant signature; both owners must have signed (sighash, path).
struct CovenantCheck {
    crypto::CovenantKeySet keyset;
    std::uint8_t path = 0;
    friend bool operator==(const CovenantCheck&, const CovenantCheck&) = default;
};
/// Push key, CHECKSIGVERIFY.
struct CSigV {
    crypto::KeyId key;
    friend bool operator==(const CSigV&, const CSigV&) = default;
};
/// Push T, CHECKSEQUENCEVERIFY, DROP. Relative: spent output depth >= T.
struct CSeqV {
    std::uint32_t blocks = 0;
    friend bool operator==(const CSeqV&, const CSeqV&) = default;
};
/// Push digest, HASH160 EQUALVERIFY.
struct CHashV {
    crypto::Hash160 digest;
    friend bool operator==(const CHashV&, const CHashV&) = default;
};
/// Push value, EQUALVERIFY.
struct CValV {
    std::uint32_t value = 0;
    friend bool operator==(const CValV&, const CValV&) = default;
};
/// Pops one OT signature per key, verifies each, and pushes the signed
/// value (all signatures must agree on it).
struct OTCSigV {
    std::vector<crypto::OTPublicKey> keys;
    friend bool operator==(const OTCSigV&, const OTCSigV&) = default;
};
struct OpReturn {
    Bytes data;
    friend bool operator==(const OpReturn&, const OpReturn&) = default;
};
/// Absolute lock: spend height >= height (CHECKLOCKTIMEVERIFY, DROP).
struct CLockV {
    std::uint32_t height = 0;
    friend bool operator==(const CLockV&, const CLockV&) = default;
};
/// Absolute deadline: spend height < height. Used by HTLC claim leaves.
struct CBeforeV {
    std::uint32_t height = 0;
    friend bool operator==(const CBeforeV&, const CBeforeV&) = default;
};

}  // namespace op

using ScriptOp = std::variant<op::PushBytes, op::PushInt, op::Dup, op::If, op::Else, op::EndIf, op::Verify,
                              op::LessThan, op::CovenantCheck, op::CSigV, op::CSeqV, op::CHashV, op::CValV,
                              op::OTCSigV, op::OpReturn, op::CLockV, op::CBeforeV>;
using Script = std::vector<ScriptOp>;

std::string op_name(const ScriptOp& op);

/// One op per line, e.g. "CHASHV 5f1c...". OT keys print as a fingerprint.
std::string disassemble(const Script& script);

Bytes serialize(const Script& script);
Script deserialize_script(ByteReader& in);

/// If/Else/EndIf balanced and no Else outside an If.
bool well_nested(const Script& script);

/// Stack integers are unsigned 32-bit, little-endian, at most 4 bytes.
Bytes encode_int(std::uint32_t v);
std::optional<std::uint32_t> decode_int(ByteSpan item);
Bytes encode_bool(bool v);
bool truthy(ByteSpan item);

}  // namespace otspc::script
