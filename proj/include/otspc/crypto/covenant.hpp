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

// Abstract stand-ins for Schnorr/MuSig2 signatures.
//
// Each party holds a SigningKey. A signature is an HMAC over a domain tag and
// the message; verification goes through a SignerRegistry that the
// simulation trusts to hold every enrolled key. A covenant signature is the
// concatenation of both parties' MACs over (keyset, digest, path) plus the
// path byte: 65 bytes, the size of a Schnorr signature with sighash flag.

#include "otspc/crypto/hash.hpp"

#include <map>
#include <optional>

namespace otspc::crypto {

struct KeyIdTag;
using KeyId = FixedBytes<32, KeyIdTag>;

class SigningKey {
public:
    explicit SigningKey(const Hash256& secret) : secret_(secret) {}

    KeyId id() const;
    const Hash256& secret() const { return secret_; }

private:
    Hash256 secret_;
};

/// The two owners whose joint approval a Covenant-Check demands.
struct CovenantKeySet {
    KeyId alice;
    KeyId bob;

    /// Identity of the aggregated key.
    Hash256 aggregate() const;

    friend bool operator==(const CovenantKeySet&, const CovenantKeySet&) = default;
};

/// One party's consent token for (keyset, digest, path).
struct PartialSignature {
    KeyId signer;
    Hash256 mac;
    std::uint8_t path = 0;

    friend bool operator==(const PartialSignature&, const PartialSignature&) = default;
};

struct CovenantSignature {
    static constexpr std::size_t kSize = 65;
    std::array<std::uint8_t, kSize> bytes{};

    std::uint8_t path() const { return bytes[64]; }
    ByteSpan span() const { return {bytes.data(), kSize}; }
    static CovenantSignature from_span(ByteSpan data);

    friend bool operator==(const CovenantSignature&, const CovenantSignature&) = default;
};

/// Single-party signature (P2WPKH stand-in), 32 bytes.
using SingleSignature = Hash256;

class SignerRegistry {
public:
    void enroll(const SigningKey& key);
    bool knows(const KeyId& id) const { return keys_.count(id) != 0; }

    bool verify_single(const KeyId& signer, const Hash256& message, ByteSpan sig) const;
    bool verify_partial(const CovenantKeySet& keyset, const Hash256& digest, std::uint8_t path,
                        const PartialSignature& partial) const;
    bool verify_covenant(const CovenantKeySet& keyset, const Hash256& digest, std::uint8_t path,
                         ByteSpan sig) const;

private:
    std::map<KeyId, SigningKey> keys_;
};

SingleSignature single_sign(const SigningKey& key, const Hash256& message);

PartialSignature covenant_partial_sign(const SigningKey& key, const CovenantKeySet& keyset,
                                       const Hash256& digest, std::uint8_t path);

/// Combines both owners' partials. Throws Errc::MissingConsent if either is
/// absent, signed by the wrong key, or made for a different path.
CovenantSignature covenant_aggregate(const CovenantKeySet& keyset, const std::optional<PartialSignature>& alice,
                                     const std::optional<PartialSignature>& bob);

}  // namespace otspc::crypto
