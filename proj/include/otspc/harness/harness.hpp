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

#include "otspc/channel/engine.hpp"
#include "otspc/watchtower/tower.hpp"

#include <array>
#include <functional>
#include <json.hpp>

namespace otspc::harness {

struct TowerSpec {
    bool enabled = false;
    bool collude = false;
    bool keep_history = false;
};

struct SimConfig {
    std::uint64_t seed = 1;
    channel::ChannelConfig channel;
    /// Alice's and Bob's share of I_BAL.
    std::array<Amount, 2> deposits{50000, 50000};
    std::array<TowerSpec, 2> towers;
    std::array<bool, 2> keep_history{false, false};
    /// Blocks are mined every this many ticks; 0 turns auto-mining off.
    std::uint32_t mine_every = 1;
};

/// One line of what a tower received, as it went over the wire.
struct TranscriptEntry {
    std::uint64_t tick = 0;
    Role client = Role::Alice;
    Bytes record;
};

/// Two peers, their towers and a chain, stepped one tick at a time.
///
/// A tick delivers the messages sent during the previous tick, runs Alice,
/// then Bob, then the towers, routes the new outboxes and finally mines.
class Simulation {
public:
    explicit Simulation(SimConfig cfg);

    /// Funds both peers and runs the handshake. Throws ProtocolViolation if
    /// the channel does not open.
    void open();

    void step();
    void run(std::uint64_t ticks);
    /// Steps until nothing is in flight and no online party is busy.
    bool run_until_idle(std::uint64_t max_ticks = 5000);
    bool idle() const;

    void pay(Role from, Amount amount);
    void set_offline(Role who, std::uint64_t ticks);
    bool online(Role who) const;

    chain::Chain& chain() { return chain_; }
    const chain::Chain& chain() const { return chain_; }
    crypto::SignerRegistry& registry() { return registry_; }
    channel::PeerEngine& peer(Role r) { return *peers_[idx(r)]; }
    const channel::PeerEngine& peer(Role r) const { return *peers_[idx(r)]; }
    watchtower::Tower* tower(Role client) { return towers_[idx(client)].get(); }
    const SimConfig& config() const { return cfg_; }
    std::uint64_t now() const { return now_; }

    Amount balance(Role r) const;
    Amount tower_balance(Role client) const;
    const script::OutputLock& tower_address(Role client) const { return tower_addr_[idx(client)]; }

    /// Called on every peer message before delivery.
    std::function<void(channel::Message&)> tamper;
    /// Called on every tower record before the tower ingests it.
    std::function<void(Role, Bytes&)> tamper_tower;

    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    const std::vector<std::string>& log() const { return log_; }
    void note(const std::string& event, nlohmann::ordered_json fields = {});
    /// States seen by either peer that do not add up to I_BAL.
    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::size_t idx(Role r) { return r == Role::Alice ? 0 : 1; }
    void collect_logs();
    void audit_states();

    SimConfig cfg_;
    crypto::SignerRegistry registry_;
    chain::Chain chain_{&registry_};
    std::array<std::unique_ptr<channel::PeerEngine>, 2> peers_;
    std::array<std::unique_ptr<watchtower::Tower>, 2> towers_;
    std::array<script::OutputLock, 2> tower_addr_;
    std::array<std::vector<channel::Message>, 2> queue_;
    std::array<std::uint64_t, 2> offline_until_{0, 0};
    std::uint64_t now_ = 0;
    std::vector<TranscriptEntry> transcript_;
    std::vector<std::string> log_;
    std::vector<std::string> violations_;
};

struct Assertion {
    std::string text;
    bool pass = false;
    std::string detail;
};

struct SimReport {
    std::string name;
    std::uint64_t seed = 0;
    int privacy_level = 1;
    std::map<std::string, Amount> balances;
    /// Every transaction accepted, in order: name and txid.
    std::vector<std::pair<std::string, std::string>> txids;
    std::vector<Assertion> assertions;
    std::vector<std::string> events;
    std::vector<std::string> audit;

    bool passed() const;
    nlohmann::ordered_json to_json() const;
    std::string event_log() const;
};

/// A parsed scenario file. `actions` and `expect` stay JSON; the runner
/// validates them as it goes.
struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    SimConfig sim;
    std::uint64_t tick_budget = 50000;
    nlohmann::json actions = nlohmann::json::array();
    nlohmann::json expect = nlohmann::json::array();

    /// Throws ScenarioParse.
    static Scenario parse(const std::string& text);
    static Scenario load(const std::string& path);
};

/// Runs the scenario to the end. Throws ScenarioParse on a bad action.
SimReport run_scenario(const Scenario& scenario);

/// Scenario directory: OTSPC_SCENARIO_DIR if set, else `fallback`.
std::string scenario_dir(const std::string& fallback);

}  // namespace otspc::harness
