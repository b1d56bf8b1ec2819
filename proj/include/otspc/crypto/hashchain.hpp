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

#include <vector>

namespace otspc::crypto {

/// Key chain K(length) = seed, K(i - 1) = H(K(i)). Revealing K(i) lets
/// anyone derive every K(j) with j <= i and nothing above it.
///
/// The owner keeps a checkpoint every `stride` elements so that
/// derive() costs at most `stride` hashes; holders of a single element use
/// walk_down().
class HashChain {
public:
    static constexpr std::uint32_t kMaxLength = 1u << 20;

    HashChain(const Hash256& seed, std::uint32_t length, std::uint32_t stride = 256);

    Hash256 derive(std::uint32_t index) const;
    std::uint32_t length() const { return length_; }
    const Hash256& seed() const { return seed_; }

    /// H applied `steps` times.
    static Hash256 walk_down(const Hash256& from, std::uint32_t steps);

private:
    Hash256 seed_;
    std::uint32_t length_;
    std::uint32_t stride_;
    // checkpoints_[k] = K(length - k * stride)
    std::vector<Hash256> checkpoints_;
};

}  // namespace otspc::crypto
