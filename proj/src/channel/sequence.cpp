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

#include "otspc/channel/sequence.hpp"

#include "otspc/error.hpp"

namespace otspc::channel {

SequenceManager::SequenceManager(SequenceConfig cfg) : cfg_(cfg)
{
    if (cfg_.max_gap == 0) throw Error(Errc::InvalidParams, "max_gap must be at least 1");
    if (cfg_.value_bits == 0 || cfg_.value_bits > 32) throw Error(Errc::InvalidParams, "value_bits must be 1..32");
    esn_ = static_cast<std::uint32_t>(checked(gap(0) - 1));
}

bool SequenceManager::reported(std::uint32_t j) const
{
    return cfg_.report_stride != 0 && j % cfg_.report_stride == 0;
}

std::uint32_t SequenceManager::gap(std::uint32_t j) const
{
    if (!reported(j) && !(j != UINT32_MAX && reported(j + 1))) return 1;
    ByteWriter w;
    w.fixed(cfg_.seed);
    w.u32(j);
    const auto h = crypto::tagged_hash("otspc/esn-gap", w.bytes());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h.data[i];
    // Rejection keeps the draw exactly uniform for any D.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % cfg_.max_gap;
    std::uint32_t round = 0;
    while (v >= limit) {
        ByteWriter again;
        again.fixed(h);
        again.u32(++round);
        const auto r = crypto::sha256(again.bytes());
        v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | r.data[i];
    }
    return 1 + static_cast<std::uint32_t>(v % cfg_.max_gap);
}

std::uint64_t SequenceManager::checked(std::uint64_t value) const
{
    if (value >= (std::uint64_t{1} << cfg_.value_bits))
        throw Error(Errc::EsnOverflow, "sequence number " + std::to_string(value) + " does not fit in " +
                                           std::to_string(cfg_.value_bits) + " bits");
    return value;
}

std::uint32_t SequenceManager::esn_of(std::uint32_t isn) const
{
    std::uint64_t s = gap(0) - 1;
    for (std::uint32_t j = 1; j <= isn; ++j) s = checked(s + gap(j));
    return static_cast<std::uint32_t>(checked(s));
}

std::vector<std::uint32_t> SequenceManager::table(std::uint32_t last) const
{
    std::vector<std::uint32_t> out;
    out.reserve(last + 1);
    std::uint64_t s = gap(0) - 1;
    out.push_back(static_cast<std::uint32_t>(checked(s)));
    for (std::uint32_t j = 1; j <= last; ++j) {
        s = checked(s + gap(j));
        out.push_back(static_cast<std::uint32_t>(s));
    }
    return out;
}

std::uint32_t SequenceManager::peek_next() const
{
    return static_cast<std::uint32_t>(checked(std::uint64_t{esn_} + gap(isn_ + 1)));
}

std::uint32_t SequenceManager::advance()
{
    esn_ = peek_next();
    ++isn_;
    return esn_;
}

}  // namespace otspc::channel
