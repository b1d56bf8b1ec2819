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

#define OPENSSL_SUPPRESS_DEPRECATED

#include "otspc/crypto/hash.hpp"

#include <openssl/hmac.h>
#include <openssl/ripemd.h>
#include <openssl/sha.h>

namespace otspc::crypto {

Hash256 sha256(ByteSpan data)
{
    Hash256 out;
    SHA256(data.data(), data.size(), out.data.data());
    return out;
}

Hash256 sha256d(ByteSpan data)
{
    return sha256(sha256(data).span());
}

Hash160 hash160(ByteSpan data)
{
    // RIPEMD-160 lives in the legacy provider on OpenSSL 3.0.x; the
    // low-level entry point works regardless of provider configuration.
    auto inner = sha256(data);
    Hash160 out;
    RIPEMD160(inner.data.data(), inner.data.size(), out.data.data());
    return out;
}

Hash256 tagged_hash(std::string_view tag, ByteSpan data)
{
    auto t = sha256(as_bytes(tag));
    ByteWriter w;
    w.fixed(t);
    w.fixed(t);
    w.raw(data);
    return sha256(w.bytes());
}

Hash256 hmac_sha256(ByteSpan key, ByteSpan message)
{
    Hash256 out;
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
         out.data.data(), &len);
    return out;
}

}  // namespace otspc::crypto
