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

#include "otspc/bytes.hpp"

#include <string_view>

namespace otspc::crypto {

struct Hash256Tag;
struct Hash160Tag;
struct PreimageTag;

/// Primary digest: SHA-256.
using Hash256 = FixedBytes<32, Hash256Tag>;
/// Address-style digest used by CHASHV: RIPEMD-160 of SHA-256 (HASH160).
using Hash160 = FixedBytes<20, Hash160Tag>;
/// 32-byte secret whose hash160 is committed in a script.
using Preimage = FixedBytes<32, PreimageTag>;

Hash256 sha256(ByteSpan data);
Hash256 sha256d(ByteSpan data);
Hash160 hash160(ByteSpan data);

/// sha256(sha256(tag) || sha256(tag) || data), BIP340-style domain separation.
Hash256 tagged_hash(std::string_view tag, ByteSpan data);

Hash256 hmac_sha256(ByteSpan key, ByteSpan message);

inline Hash160 commit(const Preimage& p) { return hash160(p.span()); }

}  // namespace otspc::crypto
