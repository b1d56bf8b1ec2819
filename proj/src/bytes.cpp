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

#include "otspc/bytes.hpp"

namespace otspc {

const char* errc_name(Errc code)
{
    switch (code) {
    case Errc::Malformed: return "Malformed";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::KeyReuse: return "KeyReuse";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::MissingConsent: return "MissingConsent";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::LeafNotInTree: return "LeafNotInTree";
    case Errc::MissingItem: return "MissingItem";
    case Errc::UnknownTx: return "UnknownTx";
    case Errc::InsufficientFunding: return "InsufficientFunding";
    case Errc::StateZero: return "StateZero";
    case Errc::WrongLevel: return "WrongLevel";
    case Errc::EsnOverflow: return "EsnOverflow";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::InsufficientBalance: return "InsufficientBalance";
    case Errc::WrongPreimage: return "WrongPreimage";
    case Errc::UnknownHtlc: return "UnknownHtlc";
    case Errc::UnknownChannel: return "UnknownChannel";
    case Errc::ScenarioParse: return "ScenarioParse";
    }
    return "Unknown";
}

std::string to_hex(ByteSpan data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

namespace {

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) throw Error(Errc::Malformed, "odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::Malformed, "invalid hex digit");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

void ByteWriter::u32(std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::var(ByteSpan data)
{
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
}

ByteSpan ByteReader::raw(std::size_t n)
{
    if (remaining() < n) throw Error(Errc::Malformed, "truncated input");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8()
{
    return raw(1)[0];
}

std::uint32_t ByteReader::u32()
{
    auto b = raw(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t ByteReader::u64()
{
    auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

Bytes ByteReader::var()
{
    auto n = u32();
    auto b = raw(n);
    return {b.begin(), b.end()};
}

std::string ByteReader::str()
{
    auto b = var();
    return {b.begin(), b.end()};
}

void ByteReader::expect_done() const
{
    if (!done()) throw Error(Errc::Malformed, "trailing bytes");
}

Bytes encode_u32(std::uint32_t v)
{
    ByteWriter w;
    w.u32(v);
    return std::move(w).bytes();
}

Bytes encode_u64(std::uint64_t v)
{
    ByteWriter w;
    w.u64(v);
    return std::move(w).bytes();
}

}  // namespace otspc
