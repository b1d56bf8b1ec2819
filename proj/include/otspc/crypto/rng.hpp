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

#include <random>

namespace otspc::crypto {

/// Seeded deterministic generator. std::mt19937_64 output is fixed by the
/// standard; the range reduction is done here (the std distributions are
/// implementation-defined) so replays match across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [lo, hi], unbiased by rejection.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

    void fill(std::span<std::uint8_t> out);

    template <class T>
    T bytes()
    {
        T out;
        fill(out.data);
        return out;
    }

    Rng fork() { return Rng(next()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace otspc::crypto
