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

#include "otspc/analysis/analysis.hpp"

#include "otspc/error.hpp"

#include <charconv>
#include <cmath>

namespace otspc::analysis {

namespace {

std::int64_t parse_int(std::string_view s)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw Error(Errc::InvalidParams, "not a number: " + std::string(s));
    return v;
}

}  // namespace

Rational parse_rational(std::string_view text)
{
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto den = parse_int(text.substr(slash + 1));
        if (den == 0) throw Error(Errc::InvalidParams, "zero denominator");
        return {parse_int(text.substr(0, slash)), den};
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        auto frac = text.substr(dot + 1);
        if (frac.size() > 12) throw Error(Errc::InvalidParams, "too many decimals");
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        const bool negative = !text.empty() && text.front() == '-';
        auto whole = text.substr(0, dot);
        std::int64_t w = whole.empty() || whole == "-" ? 0 : parse_int(whole);
        std::int64_t f = frac.empty() ? 0 : parse_int(frac);
        if (f < 0) throw Error(Errc::InvalidParams, "bad fraction");
        Rational r(w);
        r += Rational(negative ? -f : f, den);
        return r;
    }
    return Rational(parse_int(text));
}

std::string format_rational(const Rational& r)
{
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

const char* action_name(Action a)
{
    return a == Action::Cooperate ? "cooperate" : "defect";
}

void ExitPayoffs::validate() const
{
    if (p < 0 || u < 0 || c < 0) throw Error(Errc::InvalidParams, "p, u and c must be non-negative");
}

PayoffMatrix payoff_matrix(const ExitPayoffs& x)
{
    x.validate();
    const Rational exit = x.p + x.u;
    PayoffMatrix m;
    m.cells[0][0] = {-x.c / 2, -x.c / 2};
    m.cells[0][1] = {-exit, Rational(0)};
    m.cells[1][0] = {Rational(0), -exit};
    m.cells[1][1] = {-exit / 2, -exit / 2};
    return m;
}

bool is_prisoners_dilemma(const ExitPayoffs& x)
{
    x.validate();
    return x.p + x.u > x.c;
}

Action best_response(const PayoffMatrix& m, Role player, Action opponent)
{
    auto payoff = [&](Action mine) {
        return player == Role::Alice ? m.at(mine, opponent).alice : m.at(opponent, mine).bob;
    };
    return payoff(Action::Cooperate) > payoff(Action::Defect) ? Action::Cooperate : Action::Defect;
}

std::vector<std::pair<Action, Action>> pure_nash_equilibria(const PayoffMatrix& m)
{
    const Action actions[] = {Action::Cooperate, Action::Defect};
    std::vector<std::pair<Action, Action>> out;
    for (Action a : actions) {
        for (Action b : actions) {
            bool stable = true;
            for (Action d : actions) {
                if (m.at(d, b).alice > m.at(a, b).alice) stable = false;
                if (m.at(a, d).bob > m.at(a, b).bob) stable = false;
            }
            if (stable) out.emplace_back(a, b);
        }
    }
    return out;
}

Capacity capacity(std::uint32_t value_bits, double updates_per_second)
{
    if (value_bits < 1 || value_bits > 64) throw Error(Errc::InvalidParams, "value_bits must be in [1, 64]");
    if (!(updates_per_second > 0)) throw Error(Errc::InvalidParams, "rate must be positive");
    Capacity c;
    c.max_updates = std::ldexp(1.0, static_cast<int>(value_bits));
    c.days = c.max_updates / (updates_per_second * 86400.0);
    c.years = c.days / 365.0;
    return c;
}

}  // namespace otspc::analysis
