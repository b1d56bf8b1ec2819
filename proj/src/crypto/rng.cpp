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

#include "otspc/crypto/rng.hpp"

#include <limits>

namespace otspc::crypto {

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi)
{
    if (lo > hi) throw Error(Errc::InvalidParams, "empty range");
    const std::uint64_t span = hi - lo;
    if (span == std::numeric_limits<std::uint64_t>::max()) return next();
    const std::uint64_t n = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return lo + v % n;
}

void Rng::fill(std::span<std::uint8_t> out)
{
    std::size_t i = 0;
    while (i < out.size()) {
        auto v = next();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * b));
    }
}

}  // namespace otspc::crypto
