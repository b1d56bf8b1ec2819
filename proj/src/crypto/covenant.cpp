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

#include "otspc/crypto/covenant.hpp"

#include <algorithm>

namespace otspc::crypto {

namespace {

Bytes covenant_message(const CovenantKeySet& keyset, const Hash256& digest, std::uint8_t path)
{
    ByteWriter w;
    w.str("otspc/covenant");
    w.fixed(keyset.alice);
    w.fixed(keyset.bob);
    w.fixed(digest);
    w.u8(path);
    return std::move(w).bytes();
}

Bytes single_message(const Hash256& message)
{
    ByteWriter w;
    w.str("otspc/single");
    w.fixed(message);
    return std::move(w).bytes();
}

bool equal_bytes(ByteSpan a, ByteSpan b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

KeyId SigningKey::id() const
{
    return KeyId::from_span(tagged_hash("otspc/key-id", secret_.span()).span());
}

Hash256 CovenantKeySet::aggregate() const
{
    ByteWriter w;
    w.fixed(alice);
    w.fixed(bob);
    return tagged_hash("otspc/agg-key", w.bytes());
}

CovenantSignature CovenantSignature::from_span(ByteSpan data)
{
    if (data.size() != kSize) throw Error(Errc::Malformed, "covenant signature must be 65 bytes");
    CovenantSignature sig;
    std::copy(data.begin(), data.end(), sig.bytes.begin());
    return sig;
}

void SignerRegistry::enroll(const SigningKey& key)
{
    keys_.insert_or_assign(key.id(), key);
}

bool SignerRegistry::verify_single(const KeyId& signer, const Hash256& message, ByteSpan sig) const
{
    auto it = keys_.find(signer);
    if (it == keys_.end()) return false;
    return equal_bytes(single_sign(it->second, message).span(), sig);
}

bool SignerRegistry::verify_partial(const CovenantKeySet& keyset, const Hash256& digest, std::uint8_t path,
                                    const PartialSignature& partial) const
{
    if (partial.signer != keyset.alice && partial.signer != keyset.bob) return false;
    if (partial.path != path) return false;
    auto it = keys_.find(partial.signer);
    if (it == keys_.end()) return false;
    return covenant_partial_sign(it->second, keyset, digest, path) == partial;
}

bool SignerRegistry::verify_covenant(const CovenantKeySet& keyset, const Hash256& digest, std::uint8_t path,
                                     ByteSpan sig) const
{
    if (sig.size() != CovenantSignature::kSize || sig[64] != path) return false;
    auto a = keys_.find(keyset.alice);
    auto b = keys_.find(keyset.bob);
    if (a == keys_.end() || b == keys_.end()) return false;
    auto msg = covenant_message(keyset, digest, path);
    return equal_bytes(hmac_sha256(a->second.secret().span(), msg).span(), sig.subspan(0, 32))
           && equal_bytes(hmac_sha256(b->second.secret().span(), msg).span(), sig.subspan(32, 32));
}

SingleSignature single_sign(const SigningKey& key, const Hash256& message)
{
    return hmac_sha256(key.secret().span(), single_message(message));
}

PartialSignature covenant_partial_sign(const SigningKey& key, const CovenantKeySet& keyset, const Hash256& digest,
                                       std::uint8_t path)
{
    return {key.id(), hmac_sha256(key.secret().span(), covenant_message(keyset, digest, path)), path};
}

CovenantSignature covenant_aggregate(const CovenantKeySet& keyset, const std::optional<PartialSignature>& alice,
                                     const std::optional<PartialSignature>& bob)
{
    if (!alice || alice->signer != keyset.alice) throw Error(Errc::MissingConsent, "alice partial missing");
    if (!bob || bob->signer != keyset.bob) throw Error(Errc::MissingConsent, "bob partial missing");
    if (alice->path != bob->path) throw Error(Errc::MissingConsent, "partials signed different paths");
    CovenantSignature sig;
    std::copy(alice->mac.data.begin(), alice->mac.data.end(), sig.bytes.begin());
    std::copy(bob->mac.data.begin(), bob->mac.data.end(), sig.bytes.begin() + 32);
    sig.bytes[64] = alice->path;
    return sig;
}

}  // namespace otspc::crypto
