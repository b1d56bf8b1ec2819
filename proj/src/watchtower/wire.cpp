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

#include "otspc/watchtower/wire.hpp"

namespace otspc::watchtower {

namespace {

crypto::CovenantSignature read_sig(ByteReader& in)
{
    return crypto::CovenantSignature::from_span(in.raw(crypto::CovenantSignature::kSize));
}

}  // namespace

Bytes WireRecord::encode() const
{
    ByteWriter body;
    body.fixed(channel);
    body.u8(level);
    body.u8(static_cast<std::uint8_t>(kind));
    body.raw(payload);
    ByteWriter w;
    w.var(body.bytes());
    return std::move(w).bytes();
}

WireRecord WireRecord::decode(ByteSpan data)
{
    ByteReader outer(data);
    const Bytes body = outer.var();
    outer.expect_done();
    ByteReader in(body);
    WireRecord r;
    r.channel = in.fixed<32, crypto::Hash256Tag>();
    r.level = in.u8();
    if (r.level < 1 || r.level > 3) throw Error(Errc::Malformed, "bad level tag");
    const auto kind = in.u8();
    if (kind > 1) throw Error(Errc::Malformed, "bad record kind");
    r.kind = static_cast<WireKind>(kind);
    const auto rest = in.raw(in.remaining());
    r.payload.assign(rest.begin(), rest.end());
    return r;
}

Bytes L1Register::encode() const
{
    ByteWriter w;
    w.raw(tmpl.serialize());
    w.u8(shared ? 1 : 0);
    return std::move(w).bytes();
}

L1Register L1Register::decode(ByteSpan data)
{
    ByteReader in(data);
    L1Register r;
    r.tmpl = txgraph::PunishTemplate::deserialize(in);
    r.shared = in.u8() != 0;
    in.expect_done();
    return r;
}

Bytes SignedPair::encode() const
{
    ByteWriter w;
    w.u32(threshold);
    w.raw(commit.span());
    w.raw(punish.span());
    return std::move(w).bytes();
}

SignedPair SignedPair::decode(ByteReader& in)
{
    SignedPair p;
    p.threshold = in.u32();
    p.commit = read_sig(in);
    p.punish = read_sig(in);
    return p;
}

Bytes L2Packet::encode() const
{
    if (nonce.size() != kNonceSize) throw Error(Errc::InvalidParams, "anchor nonce must be 16 bytes");
    ByteWriter w;
    w.raw(tmpl.serialize());
    w.fixed(setup);
    w.i64(epsilon);
    w.raw(nonce);
    w.raw(anchor.span());
    w.raw(pair.encode());
    return std::move(w).bytes();
}

L2Packet L2Packet::decode(ByteSpan data)
{
    ByteReader in(data);
    L2Packet p;
    p.tmpl = txgraph::PunishTemplate::deserialize(in);
    p.setup = in.fixed<32, crypto::Hash256Tag>();
    p.epsilon = in.i64();
    const auto n = in.raw(kNonceSize);
    p.nonce.assign(n.begin(), n.end());
    p.anchor = read_sig(in);
    p.pair = SignedPair::decode(in);
    in.expect_done();
    return p;
}

Bytes L3Update::encode() const
{
    ByteWriter w;
    w.u32(index);
    w.fixed(key);
    return std::move(w).bytes();
}

L3Update L3Update::decode(ByteSpan data)
{
    ByteReader in(data);
    L3Update u;
    u.index = in.u32();
    u.key = in.fixed<32, crypto::Hash256Tag>();
    in.expect_done();
    return u;
}

Bytes L3Slot::encode() const
{
    ByteWriter w;
    w.raw(commit.span());
    w.raw(punish.span());
    return std::move(w).bytes();
}

L3Slot L3Slot::decode(ByteSpan data)
{
    if (data.size() != txgraph::kTowerPayloadSize) throw Error(Errc::Malformed, "slot plaintext has wrong size");
    ByteReader in(data);
    L3Slot s;
    s.commit = read_sig(in);
    s.punish = read_sig(in);
    return s;
}

}  // namespace otspc::watchtower
