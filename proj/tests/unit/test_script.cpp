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

#include <gtest/gtest.h>

using namespace otspc;
using namespace otspc::crypto;
using namespace otspc::script;

namespace {

Hash256 filled(std::uint8_t b)
{
    Hash256 h;
    h.data.fill(b);
    return h;
}

struct Fixture : ::testing::Test {
    SigningKey alice{filled(1)};
    SigningKey bob{filled(2)};
    CovenantKeySet keyset{alice.id(), bob.id()};
    SignerRegistry registry;
    ExecContext ctx;

    void SetUp() override
    {
        registry.enroll(alice);
        registry.enroll(bob);
        ctx.signers = &registry;
        ctx.sighash = sha256(as_bytes("spending tx"));
    }

    Bytes cov(std::uint8_t path)
    {
        auto sig = covenant_aggregate(keyset, covenant_partial_sign(alice, keyset, ctx.sighash, path),
                                      covenant_partial_sign(bob, keyset, ctx.sighash, path));
        return {sig.bytes.begin(), sig.bytes.end()};
    }

    Script punish_script(const OTPublicKey& key, std::uint32_t esn)
    {
        return {op::CovenantCheck{keyset, 1}, op::OTCSigV{{key}}, op::PushInt{esn}, op::LessThan{}, op::Verify{}};
    }
};

using ScriptTest = Fixture;

}  // namespace

TEST_F(ScriptTest, PunishAcceptsLowerValue)
{
    auto k = OTKeyPair::generate({}, filled(9));
    auto sig = k.sign(50).serialize();
    auto r = execute(punish_script(k.public_key(), 100), {sig, cov(1)}, ctx);
    EXPECT_TRUE(r.ok()) << r.describe();
}

TEST_F(ScriptTest, PunishRejectsEqualValueAtVerify)
{
    auto k = OTKeyPair::generate({}, filled(9));
    auto sig = k.sign(100).serialize();
    auto r = execute(punish_script(k.public_key(), 100), {sig, cov(1)}, ctx);
    EXPECT_EQ(r.error, ScriptError::ValueMismatch);
    EXPECT_EQ(r.op, "VERIFY");
}

TEST_F(ScriptTest, OtsPushesRecoveredValue)
{
    auto k = OTKeyPair::generate({}, filled(9));
    auto sig = k.sign(777);
    Script s{op::OTCSigV{{k.public_key()}}, op::CValV{777}};
    EXPECT_TRUE(execute(s, {sig.serialize()}, ctx).ok());
    auto bad = sig;
    bad.chain_values[3].data[0] ^= 1;
    auto r = execute(s, {bad.serialize()}, ctx);
    EXPECT_EQ(r.error, ScriptError::SigInvalid);
}

TEST_F(ScriptTest, HashCheck)
{
    auto p = Preimage::from_span(filled(0x33).span());
    Script s{op::CHashV{hash160(p.span())}};
    Bytes good(p.data.begin(), p.data.end());
    EXPECT_TRUE(execute(s, {good}, ctx).ok());
    auto bad = good;
    bad[0] ^= 1;
    auto r = execute(s, {bad}, ctx);
    EXPECT_EQ(r.error, ScriptError::HashMismatch);
    EXPECT_EQ(r.op_index, 0u);
}

TEST_F(ScriptTest, SequenceMonotone)
{
    Script s{op::CSeqV{6}};
    for (std::uint32_t c = 0; c < 20; ++c) {
        ctx.confirmations = c;
        EXPECT_EQ(execute(s, {}, ctx).ok(), c >= 6) << c;
    }
}

TEST_F(ScriptTest, AbsoluteLocks)
{
    ctx.height = 99;
    EXPECT_EQ(execute({op::CLockV{100}}, {}, ctx).error, ScriptError::LocktimeNotReached);
    EXPECT_TRUE(execute({op::CBeforeV{100}}, {}, ctx).ok());
    ctx.height = 100;
    EXPECT_TRUE(execute({op::CLockV{100}}, {}, ctx).ok());
    EXPECT_EQ(execute({op::CBeforeV{100}}, {}, ctx).error, ScriptError::Expired);
}

TEST_F(ScriptTest, Branches)
{
    Script s{op::If{}, op::CValV{1}, op::Else{}, op::CValV{2}, op::EndIf{}};
    EXPECT_TRUE(execute(s, {encode_int(1), encode_bool(true)}, ctx).ok());
    EXPECT_TRUE(execute(s, {encode_int(2), encode_bool(false)}, ctx).ok());
    EXPECT_EQ(execute(s, {encode_int(2), encode_bool(true)}, ctx).error, ScriptError::ValueMismatch);
    EXPECT_EQ(execute(s, {}, ctx).error, ScriptError::StackUnderflow);
    EXPECT_EQ(execute({op::If{}, op::Else{}}, {encode_bool(true)}, ctx).error, ScriptError::BadNesting);
    EXPECT_EQ(execute({op::EndIf{}}, {}, ctx).error, ScriptError::BadNesting);
}

TEST_F(ScriptTest, CovenantPathBinding)
{
    Script s{op::CovenantCheck{keyset, 2}};
    EXPECT_TRUE(execute(s, {cov(2)}, ctx).ok());
    EXPECT_EQ(execute(s, {cov(1)}, ctx).error, ScriptError::SigInvalid);
}

TEST_F(ScriptTest, FinalStackMustBeTruthy)
{
    EXPECT_EQ(execute({op::PushInt{0}}, {}, ctx).error, ScriptError::EvalFalse);
    EXPECT_TRUE(execute({op::PushInt{3}}, {}, ctx).ok());
    EXPECT_EQ(execute({op::OpReturn{{1, 2}}}, {}, ctx).error, ScriptError::OpReturnExecuted);
}

TEST_F(ScriptTest, SerializationRoundTrip)
{
    auto k = OTKeyPair::generate({}, filled(9));
    Script s{op::CovenantCheck{keyset, 1}, op::If{}, op::OTCSigV{{k.public_key()}}, op::CValV{5}, op::Else{},
             op::CHashV{hash160(as_bytes("x"))}, op::EndIf{}, op::CSeqV{144}, op::CLockV{7}, op::CBeforeV{8},
             op::PushBytes{{1, 2, 3}}, op::Dup{}, op::LessThan{}, op::Verify{}, op::CSigV{alice.id()},
             op::OpReturn{{9}}};
    auto wire = serialize(s);
    ByteReader r(wire);
    EXPECT_EQ(deserialize_script(r), s);
    EXPECT_TRUE(r.done());
    auto text = disassemble(s);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(s.size()));
    EXPECT_NE(text.find("CSEQV 144"), std::string::npos);
}

TEST_F(ScriptTest, LockRevealAndCommitment)
{
    Script a{op::CSeqV{1}}, b{op::CSeqV{2}}, c{op::CHashV{hash160(as_bytes("b"))}};
    auto single = lock_of({a});
    EXPECT_EQ(single.kind(), LockKind::ScriptHash);
    EXPECT_EQ(single.reveal(0), a);
    auto tree = lock_of({a, b, c});
    EXPECT_EQ(tree.reveal(2), c);
    EXPECT_THROW(tree.reveal(3), Error);
    EXPECT_THROW(tree.index_of(Script{op::CSeqV{9}}), Error);
    EXPECT_NE(lock_of({b, a, c}).commitment(), tree.commitment());

    ctx.confirmations = 5;
    auto w = tree.witness(1, {});
    EXPECT_TRUE(verify_spend(tree.kind(), tree.commitment(), w, ctx).ok());
    auto forged = w;
    forged.script = Script{op::PushInt{1}};
    EXPECT_FALSE(verify_spend(tree.kind(), tree.commitment(), forged, ctx).ok());
    auto wire = w.serialize();
    ByteReader r(wire);
    EXPECT_EQ(Witness::deserialize(r), w);
}

TEST_F(ScriptTest, BuildWitnessForNamedPath)
{
    Preimage pa = Preimage::from_span(filled(0xa).span());
    Preimage pb = Preimage::from_span(filled(0xb).span());
    Script fast{op::CovenantCheck{keyset, 2}, op::CHashV{commit(pa)}, op::CHashV{commit(pb)}};
    auto lock = lock_of({Script{op::CovenantCheck{keyset, 1}, op::CSeqV{10}}, fast});
    PathDescriptor path{1, 2, {Slot::PreimageB, Slot::PreimageA, Slot::CovenantSig}};
    SigningMaterial m;
    m.covenant = CovenantSignature::from_span(cov(2));
    m.preimage_a = pa;
    m.preimage_b = pb;
    auto w = build_witness_for(lock, path, m);
    EXPECT_TRUE(verify_spend(lock.kind(), lock.commitment(), w, ctx).ok());
    m.preimage_b.reset();
    try {
        build_witness_for(lock, path, m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingItem);
    }
}
