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

#include "otspc/crypto/hashchain.hpp"

namespace otspc::crypto {

HashChain::HashChain(const Hash256& seed, std::uint32_t length, std::uint32_t stride)
    : seed_(seed), length_(length), stride_(stride == 0 ? 1 : stride)
{
    if (length_ == 0 || length_ > kMaxLength) throw Error(Errc::InvalidParams, "hash chain length out of range");
    Hash256 cur = seed_;
    checkpoints_.push_back(cur);
    for (std::uint32_t k = 1; std::uint64_t{k} * stride_ <= length_; ++k) {
        cur = walk_down(cur, stride_);
        checkpoints_.push_back(cur);
    }
}

Hash256 HashChain::derive(std::uint32_t index) const
{
    if (index > length_) throw Error(Errc::IndexOutOfRange, "hash chain index beyond length");
    const std::uint32_t distance = length_ - index;
    const std::uint32_t k = distance / stride_;
    return walk_down(checkpoints_[k], distance - k * stride_);
}

Hash256 HashChain::walk_down(const Hash256& from, std::uint32_t steps)
{
    Hash256 cur = from;
    for (std::uint32_t i = 0; i < steps; ++i) cur = sha256(cur.span());
    return cur;
}

}  // namespace otspc::crypto
