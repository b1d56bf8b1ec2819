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

#include "otspc/bytes.hpp"
#include "otspc/crypto/hash.hpp"

#include <cstdint>
#include <vector>

namespace otspc::channel {

struct SequenceConfig {
    crypto::Hash256 seed;
    /// Reported states J_q are the multiples of this stride; 0 reports none.
    std::uint32_t report_stride = 0;
    /// D: gaps around reported states are uniform on [1, D].
    std::uint32_t max_gap = 16;
    /// Signed values must stay below 2^value_bits.
    std::uint32_t value_bits = 32;
};

/// ISN to ESN mapping. S(0) = d(0) - 1 and S(j) = S(j-1) + d(j), where
/// d(j) = 1 unless j or j+1 is reported.
class SequenceManager {
public:
    explicit SequenceManager(SequenceConfig cfg);

    bool reported(std::uint32_t j) const;
    std::uint32_t gap(std::uint32_t j) const;
    /// Throws EsnOverflow if the value does not fit.
    std::uint32_t esn_of(std::uint32_t isn) const;
    /// ESNs for isn 0..last inclusive.
    std::vector<std::uint32_t> table(std::uint32_t last) const;

    std::uint32_t isn() const { return isn_; }
    std::uint32_t esn() const { return esn_; }
    /// ESN the next state would get. Throws EsnOverflow.
    std::uint32_t peek_next() const;
    /// Moves to the next state and returns its ESN. Throws EsnOverflow.
    std::uint32_t advance();

    const SequenceConfig& config() const { return cfg_; }

private:
    std::uint64_t checked(std::uint64_t value) const;

    SequenceConfig cfg_;
    std::uint32_t isn_ = 0;
    std::uint32_t esn_ = 0;
};

}  // namespace otspc::channel
