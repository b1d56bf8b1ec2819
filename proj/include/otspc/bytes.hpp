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

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace otspc {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

/// Satoshi amounts. Signed so that conservation checks can go negative.
using Amount = std::int64_t;

std::string to_hex(ByteSpan data);
Bytes from_hex(std::string_view hex);

inline ByteSpan as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Fixed-width byte string. The tag keeps digests, preimages and key ids
/// from being mixed up at call sites.
template <std::size_t N, class Tag>
struct FixedBytes {
    static constexpr std::size_t size = N;
    std::array<std::uint8_t, N> data{};

    ByteSpan span() const { return {data.data(), N}; }
    std::string hex() const { return to_hex(span()); }
    bool is_zero() const
    {
        for (auto b : data)
            if (b != 0) return false;
        return true;
    }

    static FixedBytes from_span(ByteSpan in);
    static FixedBytes from_hex(std::string_view hex) { return from_span(otspc::from_hex(hex)); }

    friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

/// Append-only little-endian writer used by every canonical serialization.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void raw(ByteSpan data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    /// u32 length prefix followed by the bytes.
    void var(ByteSpan data);
    void str(std::string_view s) { var(as_bytes(s)); }
    template <std::size_t N, class Tag>
    void fixed(const FixedBytes<N, Tag>& v) { raw(v.span()); }

    const Bytes& bytes() const& { return buf_; }
    Bytes bytes() && { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Bounds-checked reader; throws Error(Errc::Malformed) on truncation.
class ByteReader {
public:
    explicit ByteReader(ByteSpan data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    ByteSpan raw(std::size_t n);
    Bytes var();
    std::string str();
    template <std::size_t N, class Tag>
    FixedBytes<N, Tag> fixed() { return FixedBytes<N, Tag>::from_span(raw(N)); }

    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_done() const;

private:
    ByteSpan data_;
    std::size_t pos_ = 0;
};

Bytes encode_u32(std::uint32_t v);
Bytes encode_u64(std::uint64_t v);

}  // namespace otspc

#include "otspc/error.hpp"

namespace otspc {

template <std::size_t N, class Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from_span(ByteSpan in)
{
    if (in.size() != N) throw Error(Errc::Malformed, "fixed-width value has wrong length");
    FixedBytes out;
    for (std::size_t i = 0; i < N; ++i) out.data[i] = in[i];
    return out;
}

}  // namespace otspc
