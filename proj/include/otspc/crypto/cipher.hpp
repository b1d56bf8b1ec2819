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

#include "otspc/crypto/hash.hpp"

namespace otspc::crypto {

struct IvTag;
/// ChaCha20-Poly1305 nonce.
using Iv = FixedBytes<12, IvTag>;

/// Authenticated ciphertext. The ciphertext has the payload's length.
struct CipherPacket {
    Iv iv;
    Bytes ciphertext;
    std::array<std::uint8_t, 16> tag{};

    Bytes serialize() const;
    static CipherPacket deserialize(ByteReader& in);
    std::size_t encoded_size() const { return Iv::size + 4 + ciphertext.size() + tag.size(); }

    friend bool operator==(const CipherPacket&, const CipherPacket&) = default;
};

/// Keys are any 32-byte secret: a preimage or a hash-chain element.
CipherPacket encrypt(ByteSpan key, ByteSpan payload, const Iv& iv);

/// Throws Error(Errc::IntegrityFailure) on wrong key or tampering.
Bytes decrypt(ByteSpan key, const CipherPacket& packet);

}  // namespace otspc::crypto
