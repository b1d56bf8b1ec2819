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

// otspc: run channel scenarios and print the reference numbers.

#include "otspc/analysis/analysis.hpp"
#include "otspc/harness/harness.hpp"
#include "otspc/txgraph/txgraph.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

using namespace otspc;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed, std::optional<int> level,
            const std::string& log_path, bool as_json)
{
    auto scenario = harness::Scenario::load(file);
    if (seed) scenario.seed = scenario.sim.seed = *seed;
    if (level) {
        scenario.sim.channel.privacy_level = *level;
        scenario.sim.channel.validate();
    }
    const auto report = harness::run_scenario(scenario);

    if (!log_path.empty()) {
        std::ofstream out(log_path, std::ios::binary);
        if (!out) throw Error(Errc::InvalidParams, "cannot write " + log_path);
        out << report.event_log();
    }
    if (as_json) {
        std::cout << report.to_json().dump(2) << "\n";
    } else {
        std::cout << "scenario " << report.name << "  seed " << report.seed << "  level " << report.privacy_level
                  << "\n";
        for (const auto& [who, amount] : report.balances) std::printf("  %-12s %12lld\n", who.c_str(),
                                                                      static_cast<long long>(amount));
        std::cout << "  " << report.txids.size() << " transactions, " << report.events.size() << " events\n";
        for (const auto& a : report.assertions) {
            std::cout << (a.pass ? "PASS " : "FAIL ") << a.text;
            if (!a.detail.empty()) std::cout << "  (" << a.detail << ")";
            std::cout << "\n";
        }
        for (const auto& line : report.audit) std::cout << "audit: " << line << "\n";
    }
    return report.passed() ? kPass : kFail;
}

int cmd_payoff(const std::string& p, const std::string& u, const std::string& c)
{
    using namespace analysis;
    const ExitPayoffs x{parse_rational(p), parse_rational(u), parse_rational(c)};
    x.validate();
    const auto m = payoff_matrix(x);
    const bool dilemma = is_prisoners_dilemma(x);

    std::printf("%-18s %-24s %s\n", "alice \\ bob", "cooperate", "defect");
    for (Action a : {Action::Cooperate, Action::Defect}) {
        std::printf("%-18s", action_name(a));
        for (Action b : {Action::Cooperate, Action::Defect}) {
            const auto& cell = m.at(a, b);
            const auto text = "(" + format_rational(cell.alice) + ", " + format_rational(cell.bob) + ")";
            std::printf(b == Action::Cooperate ? " %-24s" : " %s", text.c_str());
        }
        std::printf("\n");
    }
    std::cout << "prisoners_dilemma: " << (dilemma ? "true" : "false") << "\n";

    nlohmann::ordered_json j;
    j["p"] = format_rational(x.p);
    j["u"] = format_rational(x.u);
    j["c"] = format_rational(x.c);
    j["cells"] = nlohmann::ordered_json::array();
    for (Action a : {Action::Cooperate, Action::Defect})
        for (Action b : {Action::Cooperate, Action::Defect})
            j["cells"].push_back({{"alice_action", action_name(a)},
                                  {"bob_action", action_name(b)},
                                  {"alice", format_rational(m.at(a, b).alice)},
                                  {"bob", format_rational(m.at(a, b).bob)}});
    j["equilibria"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : pure_nash_equilibria(m)) j["equilibria"].push_back({action_name(a), action_name(b)});
    j["prisoners_dilemma"] = dilemma;
    std::cout << j.dump() << "\n";
    return kPass;
}

int cmd_capacity(std::uint32_t bits, double rate)
{
    const auto c = analysis::capacity(bits, rate);
    std::printf("value bits     %u\n", bits);
    std::printf("updates/s      %g\n", rate);
    std::printf("max updates    %.0f\n", c.max_updates);
    std::printf("days           %.1f\n", c.days);
    std::printf("years          %.2f\n", c.years);
    return kPass;
}

int cmd_weights()
{
    std::uint32_t total = 0;
    for (const auto& w : txgraph::exit_path_weights()) {
        std::printf("%s\n", w.tx.c_str());
        for (const auto& [part, wu] : w.parts) std::printf("  %-28s %6u wu\n", part.c_str(), wu);
        std::printf("  %-28s %6u wu\n", "subtotal", w.total);
        total += w.total;
    }
    std::printf("Total: %u wu\n", total);
    return kPass;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"OTS payment channel engine and simulator"};
    app.require_subcommand(1);

    std::string file, log_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> level;
    bool as_json = false;
    auto* run = app.add_subcommand("run", "Run a scenario file and check its expectations");
    run->add_option("scenario", file, "Scenario JSON")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--privacy-level", level, "Override the privacy level")->check(CLI::Range(1, 3));
    run->add_option("--log", log_path, "Write the event log here");
    run->add_flag("--json", as_json, "Print the full report as JSON");

    std::string p, u, c;
    auto* payoff = app.add_subcommand("payoff", "Exit game payoff matrix");
    payoff->add_option("--p", p, "Punishment gain")->required();
    payoff->add_option("--u", u, "Unilateral exit gain")->required();
    payoff->add_option("--c", c, "Exit cost")->required();

    std::uint32_t bits = 32;
    double rate = 10;
    auto* cap = app.add_subcommand("capacity", "Channel lifetime for a sequence number width");
    cap->add_option("--bits", bits, "Signed value bits")->required()->check(CLI::Range(1, 64));
    cap->add_option("--rate", rate, "Updates per second")->required();

    auto* weights = app.add_subcommand("weights", "Exit path weight table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kPass : kUsage;
    }

    try {
        if (*run) return cmd_run(file, seed, level, log_path, as_json);
        if (*payoff) return cmd_payoff(p, u, c);
        if (*cap) return cmd_capacity(bits, rate);
        if (*weights) return cmd_weights();
    } catch (const Error& e) {
        std::cerr << "otspc: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
