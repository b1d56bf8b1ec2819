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

#include "otspc/script/script.hpp"

#include <sstream>

namespace otspc::script {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Serialized opcode bytes. Stable: they feed output commitments.
enum : std::uint8_t {
    kPushBytes = 0x01,
    kPushInt = 0x02,
    kDup = 0x10,
    kIf = 0x11,
    kElse = 0x12,
    kEndIf = 0x13,
    kVerify = 0x14,
    kLessThan = 0x15,
    kCovenantCheck = 0x20,
    kCSigV = 0x21,
    kCSeqV = 0x22,
    kCHashV = 0x23,
    kCValV = 0x24,
    kOTCSigV = 0x25,
    kCLockV = 0x26,
    kCBeforeV = 0x27,
    kOpReturn = 0x6a,
};

std::string short_hex(ByteSpan data)
{
    return to_hex(data.subspan(0, std::min<std::size_t>(data.size(), 8)));
}

}  // namespace

std::string op_name(const ScriptOp& o)
{
    return std::visit(overloaded{
                          [](const op::PushBytes&) { return std::string("PUSH"); },
                          [](const op::PushInt&) { return std::string("PUSHINT"); },
                          [](const op::Dup&) { return std::string("DUP"); },
                          [](const op::If&) { return std::string("IF"); },
                          [](const op::Else&) { return std::string("ELSE"); },
                          [](const op::EndIf&) { return std::string("ENDIF"); },
                          [](const op::Verify&) { return std::string("VERIFY"); },
                          [](const op::LessThan&) { return std::string("LESSTHAN"); },
                          [](const op::CovenantCheck&) { return std::string("COVENANT_CHECK"); },
                          [](const op::CSigV&) { return std::string("CSIGV"); },
                          [](const op::CSeqV&) { return std::string("CSEQV"); },
                          [](const op::CHashV&) { return std::string("CHASHV"); },
                          [](const op::CValV&) { return std::string("CVALV"); },
                          [](const op::OTCSigV&) { return std::string("OT_CSIGV"); },
                          [](const op::OpReturn&) { return std::string("OP_RETURN"); },
                          [](const op::CLockV&) { return std::string("CLOCKV"); },
                          [](const op::CBeforeV&) { return std::string("CBEFOREV"); },
                      },
                      o);
}

std::string disassemble(const Script& script)
{
    std::ostringstream out;
    for (const auto& o : script) {
        out << op_name(o);
        std::visit(overloaded{
                       [&](const op::PushBytes& p) { out << ' ' << to_hex(p.data); },
                       [&](const op::PushInt& p) { out << ' ' << p.value; },
                       [&](const op::CovenantCheck& p) {
                           out << ' ' << static_cast<int>(p.path) << ' ' << short_hex(p.keyset.aggregate().span());
                       },
                       [&](const op::CSigV& p) { out << ' ' << short_hex(p.key.span()); },
                       [&](const op::CSeqV& p) { out << ' ' << p.blocks; },
                       [&](const op::CHashV& p) { out << ' ' << p.digest.hex(); },
                       [&](const op::CValV& p) { out << ' ' << p.value; },
                       [&](const op::OTCSigV& p) {
                           for (const auto& k : p.keys) out << ' ' << short_hex(k.fingerprint().span());
                       },
                       [&](const op::OpReturn& p) { out << ' ' << to_hex(p.data); },
                       [&](const op::CLockV& p) { out << ' ' << p.height; },
                       [&](const op::CBeforeV& p) { out << ' ' << p.height; },
                       [](const auto&) {},
                   },
                   o);
        out << '\n';
    }
    return out.str();
}

Bytes serialize(const Script& script)
{
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(script.size()));
    for (const auto& o : script) {
        std::visit(overloaded{
                       [&](const op::PushBytes& p) {
                           w.u8(kPushBytes);
                           w.var(p.data);
                       },
                       [&](const op::PushInt& p) {
                           w.u8(kPushInt);
                           w.u32(p.value);
                       },
                       [&](const op::Dup&) { w.u8(kDup); },
                       [&](const op::If&) { w.u8(kIf); },
                       [&](const op::Else&) { w.u8(kElse); },
                       [&](const op::EndIf&) { w.u8(kEndIf); },
                       [&](const op::Verify&) { w.u8(kVerify); },
                       [&](const op::LessThan&) { w.u8(kLessThan); },
                       [&](const op::CovenantCheck& p) {
                           w.u8(kCovenantCheck);
                           w.fixed(p.keyset.alice);
                           w.fixed(p.keyset.bob);
                           w.u8(p.path);
                       },
                       [&](const op::CSigV& p) {
                           w.u8(kCSigV);
                           w.fixed(p.key);
                       },
                       [&](const op::CSeqV& p) {
                           w.u8(kCSeqV);
                           w.u32(p.blocks);
                       },
                       [&](const op::CHashV& p) {
                           w.u8(kCHashV);
                           w.fixed(p.digest);
                       },
                       [&](const op::CValV& p) {
                           w.u8(kCValV);
                           w.u32(p.value);
                       },
                       [&](const op::OTCSigV& p) {
                           w.u8(kOTCSigV);
                           w.u32(static_cast<std::uint32_t>(p.keys.size()));
                           for (const auto& k : p.keys) w.raw(k.serialize());
                       },
                       [&](const op::OpReturn& p) {
                           w.u8(kOpReturn);
                           w.var(p.data);
                       },
                       [&](const op::CLockV& p) {
                           w.u8(kCLockV);
                           w.u32(p.height);
                       },
                       [&](const op::CBeforeV& p) {
                           w.u8(kCBeforeV);
                           w.u32(p.height);
                       },
                   },
                   o);
    }
    return std::move(w).bytes();
}

Script deserialize_script(ByteReader& in)
{
    Script script;
    auto n = in.u32();
    if (n > 10000) throw Error(Errc::Malformed, "script too long");
    script.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        switch (in.u8()) {
        case kPushBytes: script.push_back(op::PushBytes{in.var()}); break;
        case kPushInt: script.push_back(op::PushInt{in.u32()}); break;
        case kDup: script.push_back(op::Dup{}); break;
        case kIf: script.push_back(op::If{}); break;
        case kElse: script.push_back(op::Else{}); break;
        case kEndIf: script.push_back(op::EndIf{}); break;
        case kVerify: script.push_back(op::Verify{}); break;
        case kLessThan: script.push_back(op::LessThan{}); break;
        case kCovenantCheck: {
            op::CovenantCheck c;
            c.keyset.alice = in.fixed<32, crypto::KeyIdTag>();
            c.keyset.bob = in.fixed<32, crypto::KeyIdTag>();
            c.path = in.u8();
            script.push_back(c);
            break;
        }
        case kCSigV: script.push_back(op::CSigV{in.fixed<32, crypto::KeyIdTag>()}); break;
        case kCSeqV: script.push_back(op::CSeqV{in.u32()}); break;
        case kCHashV: script.push_back(op::CHashV{in.fixed<20, crypto::Hash160Tag>()}); break;
        case kCValV: script.push_back(op::CValV{in.u32()}); break;
        case kOTCSigV: {
            op::OTCSigV o;
            auto k = in.u32();
            if (k > 16) throw Error(Errc::Malformed, "too many OT keys");
            for (std::uint32_t j = 0; j < k; ++j) o.keys.push_back(crypto::OTPublicKey::deserialize(in));
            script.push_back(std::move(o));
            break;
        }
        case kOpReturn: script.push_back(op::OpReturn{in.var()}); break;
        case kCLockV: script.push_back(op::CLockV{in.u32()}); break;
        case kCBeforeV: script.push_back(op::CBeforeV{in.u32()}); break;
        default: throw Error(Errc::Malformed, "unknown opcode");
        }
    }
    return script;
}

bool well_nested(const Script& script)
{
    std::vector<bool> seen_else;
    for (const auto& o : script) {
        if (std::holds_alternative<op::If>(o)) {
            seen_else.push_back(false);
        } else if (std::holds_alternative<op::Else>(o)) {
            if (seen_else.empty() || seen_else.back()) return false;
            seen_else.back() = true;
        } else if (std::holds_alternative<op::EndIf>(o)) {
            if (seen_else.empty()) return false;
            seen_else.pop_back();
        }
    }
    return seen_else.empty();
}

Bytes encode_int(std::uint32_t v)
{
    return encode_u32(v);
}

std::optional<std::uint32_t> decode_int(ByteSpan item)
{
    if (item.size() > 4) return std::nullopt;
    std::uint32_t v = 0;
    for (std::size_t i = item.size(); i-- > 0;) v = (v << 8) | item[i];
    return v;
}

Bytes encode_bool(bool v)
{
    return v ? Bytes{1} : Bytes{};
}

bool truthy(ByteSpan item)
{
    for (auto b : item)
        if (b != 0) return true;
    return false;
}

}  // namespace otspc::script
