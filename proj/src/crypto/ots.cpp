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

#include "otspc/crypto/ots.hpp"

namespace otspc::crypto {

void OTParams::validate() const
{
    if (chunk_bits < 1 || chunk_bits > 8) throw Error(Errc::InvalidParams, "chunk_bits must be in [1, 8]");
    if (value_bits < 1 || value_bits > 32) throw Error(Errc::InvalidParams, "value_bits must be in [1, 32]");
    if (value_bits % chunk_bits != 0)
        throw Error(Errc::InvalidParams, "value_bits must be a multiple of chunk_bits");
}

std::uint32_t OTParams::checksum_digits() const
{
    // Enough base-2^w digits to hold message_digits * max_digit.
    std::uint64_t max_sum = std::uint64_t{message_digits()} * max_digit();
    std::uint32_t n = 0;
    do {
        ++n;
        max_sum >>= chunk_bits;
    } while (max_sum > 0);
    return n;
}

std::vector<std::uint8_t> ots_encode_digits(const OTParams& params, std::uint32_t value)
{
    params.validate();
    if (std::uint64_t{value} >= params.value_limit())
        throw Error(Errc::ValueOutOfRange, "value does not fit in value_bits");

    const auto w = params.chunk_bits;
    const auto mask = params.max_digit();
    std::vector<std::uint8_t> digits;
    digits.reserve(params.total_digits());

    std::uint32_t checksum = 0;
    for (std::uint32_t i = 0; i < params.message_digits(); ++i) {
        auto shift = params.value_bits - w * (i + 1);
        auto d = static_cast<std::uint8_t>((std::uint64_t{value} >> shift) & mask);
        digits.push_back(d);
        checksum += mask - d;
    }
    for (std::uint32_t i = 0; i < params.checksum_digits(); ++i) {
        auto shift = w * (params.checksum_digits() - 1 - i);
        digits.push_back(static_cast<std::uint8_t>((checksum >> shift) & mask));
    }
    return digits;
}

std::optional<std::uint32_t> ots_decode_digits(const OTParams& params, std::span<const std::uint8_t> digits)
{
    if (digits.size() != params.total_digits()) return std::nullopt;
    const auto mask = params.max_digit();
    std::uint64_t value = 0;
    std::uint32_t checksum = 0;
    for (std::uint32_t i = 0; i < params.message_digits(); ++i) {
        if (digits[i] > mask) return std::nullopt;
        value = (value << params.chunk_bits) | digits[i];
        checksum += mask - digits[i];
    }
    std::uint64_t encoded = 0;
    for (std::uint32_t i = params.message_digits(); i < params.total_digits(); ++i) {
        if (digits[i] > mask) return std::nullopt;
        encoded = (encoded << params.chunk_bits) | digits[i];
    }
    if (encoded != checksum) return std::nullopt;
    return static_cast<std::uint32_t>(value);
}

Hash256 ots_chain(Hash256 value, std::uint32_t steps)
{
    for (std::uint32_t i = 0; i < steps; ++i) value = sha256(value.span());
    return value;
}

Hash256 OTPublicKey::fingerprint() const
{
    return tagged_hash("otspc/ots-pub", serialize());
}

Bytes OTPublicKey::serialize() const
{
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(params.value_bits));
    w.u8(static_cast<std::uint8_t>(params.chunk_bits));
    w.u32(static_cast<std::uint32_t>(chain_ends.size()));
    for (const auto& h : chain_ends) w.fixed(h);
    return std::move(w).bytes();
}

OTPublicKey OTPublicKey::deserialize(ByteReader& in)
{
    OTPublicKey pub;
    pub.params.value_bits = in.u8();
    pub.params.chunk_bits = in.u8();
    pub.params.validate();
    auto n = in.u32();
    if (n != pub.params.total_digits()) throw Error(Errc::Malformed, "public key length mismatch");
    pub.chain_ends.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) pub.chain_ends.push_back(in.fixed<32, Hash256Tag>());
    return pub;
}

Bytes OTSignature::serialize() const
{
    ByteWriter w;
    w.raw(digits);
    for (const auto& h : chain_values) w.fixed(h);
    return std::move(w).bytes();
}

std::optional<OTSignature> OTSignature::parse(ByteSpan data, const OTParams& params)
{
    const auto n = params.total_digits();
    if (data.size() != encoded_size(params)) return std::nullopt;
    OTSignature sig;
    sig.digits.assign(data.begin(), data.begin() + n);
    sig.chain_values.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) sig.chain_values.push_back(Hash256::from_span(data.subspan(n + 32 * i, 32)));
    return sig;
}

OTKeyPair OTKeyPair::generate(const OTParams& params, const Hash256& seed)
{
    params.validate();
    OTKeyPair kp;
    kp.public_.params = params;
    const auto n = params.total_digits();
    kp.secrets_.reserve(n);
    kp.public_.chain_ends.reserve(n);
    for (std::uint32_t d = 0; d < n; ++d) {
        ByteWriter w;
        w.fixed(seed);
        w.u32(d);
        auto secret = tagged_hash("otspc/ots-seed", w.bytes());
        kp.secrets_.push_back(secret);
        kp.public_.chain_ends.push_back(ots_chain(secret, params.max_digit()));
    }
    return kp;
}

OTSignature OTKeyPair::sign(std::uint32_t value)
{
    if (std::uint64_t{value} >= params().value_limit())
        throw Error(Errc::ValueOutOfRange, "value does not fit in value_bits");
    if (used_ && *used_ != value)
        throw Error(Errc::KeyReuse, "one-time key already signed " + std::to_string(*used_));

    OTSignature sig;
    sig.digits = ots_encode_digits(params(), value);
    sig.chain_values.reserve(sig.digits.size());
    for (std::size_t d = 0; d < sig.digits.size(); ++d) {
        sig.chain_values.push_back(ots_chain(secrets_[d], sig.digits[d]));
        hashes_ += sig.digits[d];
    }
    used_ = value;
    return sig;
}

std::optional<std::uint32_t> ots_recover_value(const OTPublicKey& pub, const OTSignature& sig)
{
    const auto& params = pub.params;
    auto value = ots_decode_digits(params, sig.digits);
    if (!value) return std::nullopt;
    if (sig.chain_values.size() != params.total_digits() || pub.chain_ends.size() != params.total_digits())
        return std::nullopt;
    for (std::size_t d = 0; d < sig.digits.size(); ++d) {
        if (ots_chain(sig.chain_values[d], params.max_digit() - sig.digits[d]) != pub.chain_ends[d])
            return std::nullopt;
    }
    return value;
}

bool ots_verify(const OTPublicKey& pub, std::uint32_t value, const OTSignature& sig)
{
    auto recovered = ots_recover_value(pub, sig);
    return recovered && *recovered == value;
}

}  // namespace otspc::crypto
