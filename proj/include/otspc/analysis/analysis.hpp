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

#include "otspc/role.hpp"

#include <boost/rational.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace otspc::analysis {

using Rational = boost::rational<std::int64_t>;

/// Accepts "7", "-3/4" or "0.25". Throws InvalidParams.
Rational parse_rational(std::string_view text);
std::string format_rational(const Rational& r);

enum class Action { Cooperate, Defect };
const char* action_name(Action a);

/// p: cost of locked funds during the delay, u: unilateral-exit fees,
/// c: cooperative-close fee.
struct ExitPayoffs {
    Rational p;
    Rational u;
    Rational c;
    /// Throws InvalidParams on a negative component.
    void validate() const;
};

struct Cell {
    Rational alice;
    Rational bob;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Costs are negative payoffs. Indexed [alice action][bob action].
struct PayoffMatrix {
    std::array<std::array<Cell, 2>, 2> cells;

    const Cell& at(Action alice, Action bob) const
    {
        return cells[static_cast<int>(alice)][static_cast<int>(bob)];
    }
};

PayoffMatrix payoff_matrix(const ExitPayoffs& x);
bool is_prisoners_dilemma(const ExitPayoffs& x);
/// Ties go to Defect.
Action best_response(const PayoffMatrix& m, Role player, Action opponent);
/// Pure profiles where neither player gains by deviating alone.
std::vector<std::pair<Action, Action>> pure_nash_equilibria(const PayoffMatrix& m);

struct Capacity {
    double max_updates = 0;
    double days = 0;
    double years = 0;
};

/// Throws InvalidParams unless 1 <= value_bits <= 64 and rate > 0.
Capacity capacity(std::uint32_t value_bits, double updates_per_second);

}  // namespace otspc::analysis
