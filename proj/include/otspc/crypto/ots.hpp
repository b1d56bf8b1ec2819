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

// Winternitz one-time signatures over fixed-width sequence numbers.
//
// A value of `value_bits` bits is split into base-2^w digits (most
// significant first) and followed by a checksum of sum(max - digit), also
// in base-2^w. Digit d of the signature is the secret seed of chain d hashed
// digit[d] times; the public key is every chain hashed max times. Raising a
// message digit requires lowering a checksum digit, which would need a
// hash preimage, so a single signature cannot be turned into one for a
// different value.
//
// The signature carries its digit vector in clear, so a verifier (and the
// script interpreter) can recover the signed value from the witness alone.

#include "otspc/crypto/hash.hpp"

#include <optional>
#include <vector>

namespace otspc::crypto {

struct OTParams {
    std::uint32_t value_bits = 32;
    std::uint32_t chunk_bits = 4;

    /// Throws Errc::InvalidParams unless 1 <= chunk_bits <= 8,
    /// 1 <= value_bits <= 32 and value_bits % chunk_bits == 0.
    void validate() const;

    std::uint32_t max_digit() const { return (1u << chunk_bits) - 1; }
    std::uint32_t message_digits() const { return value_bits / chunk_bits; }
    std::uint32_t checksum_digits() const;
    std::uint32_t total_digits() const { return message_digits() + checksum_digits(); }
    std::uint64_t value_limit() const { return std::uint64_t{1} << value_bits; }

    friend bool operator==(const OTParams&, const OTParams&) = default;
};

/// Message digits followed by checksum digits.
std::vector<std::uint8_t> ots_encode_digits(const OTParams& params, std::uint32_t value);

/// Inverse of ots_encode_digits; nullopt when the digit vector is not a
/// well-formed encoding (wrong length, digit overflow, checksum mismatch).
std::optional<std::uint32_t> ots_decode_digits(const OTParams& params, std::span<const std::uint8_t> digits);

struct OTPublicKey {
    OTParams params;
    std::vector<Hash256> chain_ends;

    /// Short identity used in disassembly and logs.
    Hash256 fingerprint() const;
    Bytes serialize() const;
    static OTPublicKey deserialize(ByteReader& in);

    friend bool operator==(const OTPublicKey&, const OTPublicKey&) = default;
};

struct OTSignature {
    std::vector<std::uint8_t> digits;
    std::vector<Hash256> chain_values;

    Bytes serialize() const;
    /// nullopt if the byte string is not shaped like a signature for params.
    static std::optional<OTSignature> parse(ByteSpan data, const OTParams& params);
    static std::size_t encoded_size(const OTParams& params) { return params.total_digits() * 33; }

    friend bool operator==(const OTSignature&, const OTSignature&) = default;
};

class OTKeyPair {
public:
    /// Deterministic in (params, seed).
    static OTKeyPair generate(const OTParams& params, const Hash256& seed);

    const OTPublicKey& public_key() const { return public_; }
    const OTParams& params() const { return public_.params; }
    std::optional<std::uint32_t> used_value() const { return used_; }

    /// Signing the same value again is allowed and returns the same
    /// signature. Signing a second, different value throws Errc::KeyReuse:
    /// the caller must treat the attempt as a protocol violation.
    OTSignature sign(std::uint32_t value);

    /// Number of chain hashes computed so far (useful for cost tests).
    std::uint64_t hash_count() const { return hashes_; }

private:
    OTKeyPair() = default;

    std::vector<Hash256> secrets_;
    OTPublicKey public_;
    std::optional<std::uint32_t> used_;
    std::uint64_t hashes_ = 0;
};

/// Hash `value` forward `steps` times.
Hash256 ots_chain(Hash256 value, std::uint32_t steps);

bool ots_verify(const OTPublicKey& pub, std::uint32_t value, const OTSignature& sig);

/// The value a signature encodes, or nullopt if it does not verify under pub.
std::optional<std::uint32_t> ots_recover_value(const OTPublicKey& pub, const OTSignature& sig);

}  // namespace otspc::crypto
