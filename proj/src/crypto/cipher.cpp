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

#include "otspc/crypto/cipher.hpp"

#include <openssl/evp.h>

#include <memory>

namespace otspc::crypto {

namespace {

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

void check_key(ByteSpan key)
{
    if (key.size() != 32) throw Error(Errc::InvalidParams, "cipher key must be 32 bytes");
}

}  // namespace

Bytes CipherPacket::serialize() const
{
    ByteWriter w;
    w.fixed(iv);
    w.var(ciphertext);
    w.raw(tag);
    return std::move(w).bytes();
}

CipherPacket CipherPacket::deserialize(ByteReader& in)
{
    CipherPacket p;
    p.iv = in.fixed<12, IvTag>();
    p.ciphertext = in.var();
    auto t = in.raw(16);
    std::copy(t.begin(), t.end(), p.tag.begin());
    return p;
}

CipherPacket encrypt(ByteSpan key, ByteSpan payload, const Iv& iv)
{
    check_key(key);
    CtxPtr ctx(EVP_CIPHER_CTX_new());
    CipherPacket out;
    out.iv = iv;
    out.ciphertext.resize(payload.size());
    int len = 0;
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), iv.data.data()) != 1
        || EVP_EncryptUpdate(ctx.get(), out.ciphertext.data(), &len, payload.data(), static_cast<int>(payload.size()))
               != 1
        || EVP_EncryptFinal_ex(ctx.get(), out.ciphertext.data() + len, &len) != 1
        || EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, 16, out.tag.data()) != 1) {
        throw Error(Errc::InvalidParams, "encryption failed");
    }
    return out;
}

Bytes decrypt(ByteSpan key, const CipherPacket& packet)
{
    check_key(key);
    CtxPtr ctx(EVP_CIPHER_CTX_new());
    Bytes out(packet.ciphertext.size());
    auto tag = packet.tag;
    int len = 0;
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), packet.iv.data.data()) != 1
        || EVP_DecryptUpdate(ctx.get(), out.data(), &len, packet.ciphertext.data(),
                             static_cast<int>(packet.ciphertext.size()))
               != 1
        || EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, 16, tag.data()) != 1
        || EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) {
        throw Error(Errc::IntegrityFailure, "authentication tag mismatch");
    }
    return out;
}

}  // namespace otspc::crypto
