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

#include "otspc/harness/harness.hpp"

#include "otspc/error.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace otspc::harness {

using channel::Message;
using channel::PeerEngine;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---- Simulation ----------------------------------------------------------

Simulation::Simulation(SimConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.channel.validate();
    crypto::Rng rng(cfg_.seed);
    for (Role r : {Role::Alice, Role::Bob}) {
        const auto i = idx(r);
        crypto::SigningKey key(rng.bytes<crypto::Hash256>());
        registry_.enroll(key);
        tower_addr_[i] = script::OutputLock::script_hash({script::op::CSigV{key.id()}});
        channel::EngineOptions opts;
        opts.has_tower = cfg_.towers[i].enabled;
        opts.tower_address = tower_addr_[i];
        opts.cheat.keep_history = cfg_.keep_history[i];
        peers_[i] = std::make_unique<PeerEngine>(r, cfg_.channel, rng.next(), chain_,
                                                 registry_, opts);
        if (cfg_.towers[i].enabled) {
            watchtower::TowerConfig tc;
            tc.level = cfg_.channel.privacy_level;
            tc.client = r;
            tc.collude = cfg_.towers[i].collude;
            tc.keep_history = cfg_.towers[i].keep_history || cfg_.towers[i].collude;
            towers_[i] = std::make_unique<watchtower::Tower>(tc, chain_);
        }
    }
}

void Simulation::note(const std::string& event, ojson fields)
{
    ojson j;
    j["tick"] = now_;
    j["party"] = "sim";
    j["event"] = event;
    for (auto& [k, v] : fields.items()) j[k] = v;
    log_.push_back(j.dump());
}

void Simulation::open()
{
    txgraph::ChannelParams shape;
    shape.epsilon = cfg_.channel.epsilon;
    shape.privacy_level = cfg_.channel.privacy_level;
    shape.separate_wt_outputs = cfg_.channel.separate_wt_outputs;
    const Amount c = shape.connector_total();
    const std::array<Amount, 2> share{c / 2, c - c / 2};
    for (Role r : {Role::Alice, Role::Bob}) {
        auto& p = peer(r);
        const Amount amount = cfg_.deposits[idx(r)] + share[idx(r)];
        const auto at = chain_.mint(amount, p.funding_lock(), std::string("fund-") + role_name(r));
        p.fund(at, amount, cfg_.deposits[idx(r)]);
    }
    peer(Role::Alice).start_setup();
    run_until_idle();
    for (Role r : {Role::Alice, Role::Bob})
        if (peer(r).phase() != channel::Phase::Open)
            throw Error(Errc::ProtocolViolation, std::string("channel did not open for ") + role_name(r));
}

bool Simulation::online(Role who) const
{
    return now_ >= offline_until_[idx(who)];
}

void Simulation::set_offline(Role who, std::uint64_t ticks)
{
    offline_until_[idx(who)] = now_ + ticks + 1;
    note("offline", {{"actor", role_name(who)}, {"until", offline_until_[idx(who)]}});
}

void Simulation::step()
{
    ++now_;
    for (Role r : {Role::Alice, Role::Bob}) {
        if (!online(r)) continue;
        for (auto& m : std::exchange(queue_[idx(r)], {})) peer(r).deliver(m);
    }
    for (Role r : {Role::Alice, Role::Bob})
        if (online(r)) peer(r).tick(now_);
    for (auto& t : towers_)
        if (t) t->on_tick(now_);
    for (Role r : {Role::Alice, Role::Bob}) {
        for (auto& m : peer(r).take_messages()) {
            if (tamper) tamper(m);
            queue_[idx(other(r))].push_back(std::move(m));
        }
        for (auto& rec : peer(r).take_tower_records()) {
            auto* t = tower(r);
            if (!t) continue;
            if (tamper_tower) tamper_tower(r, rec);
            transcript_.push_back({now_, r, rec});
            try {
                t->ingest(rec, now_);
            } catch (const Error& e) {
                note("tower-reject", {{"client", role_name(r)}, {"detail", e.what()}});
            }
        }
    }
    collect_logs();
    audit_states();
    if (cfg_.mine_every && now_ % cfg_.mine_every == 0) chain_.mine_blocks(1);
}

void Simulation::collect_logs()
{
    for (Role r : {Role::Alice, Role::Bob})
        for (auto& line : peer(r).take_log()) log_.push_back(std::move(line));
    for (auto& t : towers_)
        if (t)
            for (auto& line : t->take_log()) log_.push_back(std::move(line));
}

void Simulation::audit_states()
{
    for (Role r : {Role::Alice, Role::Bob}) {
        const auto& p = peer(r);
        if (!p.channel_live()) continue;
        const auto& s = p.state();
        if (!s.conserves(p.params()))
            violations_.push_back(std::string(role_name(r)) + " state " + std::to_string(s.isn) + " at tick " +
                                  std::to_string(now_));
    }
}

void Simulation::run(std::uint64_t ticks)
{
    for (std::uint64_t i = 0; i < ticks; ++i) step();
}

bool Simulation::idle() const
{
    for (Role r : {Role::Alice, Role::Bob}) {
        if (!queue_[idx(r)].empty() && online(r)) return false;
        if (online(r) && peer(r).busy()) return false;
    }
    return chain_.mempool().empty() || cfg_.mine_every == 0;
}

bool Simulation::run_until_idle(std::uint64_t max_ticks)
{
    for (std::uint64_t i = 0; i < max_ticks; ++i) {
        step();
        if (idle()) return true;
    }
    return idle();
}

void Simulation::pay(Role from, Amount amount)
{
    channel::UpdateOp op;
    op.kind = channel::UpdateKind::Pay;
    op.from = from;
    op.amount = amount;
    peer(from).propose(op);
    run_until_idle();
}

Amount Simulation::balance(Role r) const
{
    return chain_.balance_of(peer(r).address());
}

Amount Simulation::tower_balance(Role client) const
{
    return chain_.balance_of(tower_addr_[idx(client)]);
}

// ---- report --------------------------------------------------------------

bool SimReport::passed() const
{
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

ojson SimReport::to_json() const
{
    ojson j;
    j["name"] = name;
    j["seed"] = seed;
    j["privacy_level"] = privacy_level;
    j["balances"] = ojson::object();
    for (const auto& [k, v] : balances) j["balances"][k] = v;
    j["txids"] = ojson::array();
    for (const auto& [n, id] : txids) j["txids"].push_back({{"name", n}, {"txid", id}});
    j["assertions"] = ojson::array();
    for (const auto& a : assertions) {
        ojson x{{"text", a.text}, {"pass", a.pass}};
        if (!a.detail.empty()) x["detail"] = a.detail;
        j["assertions"].push_back(x);
    }
    j["audit"] = audit;
    j["passed"] = passed();
    j["events"] = ojson::array();
    for (const auto& e : events) j["events"].push_back(ojson::parse(e));
    return j;
}

std::string SimReport::event_log() const
{
    std::string out;
    for (const auto& e : events) out += e + "\n";
    return out;
}

// ---- scenario parsing ----------------------------------------------------

namespace {

[[noreturn]] void bad(const std::string& what)
{
    throw Error(Errc::ScenarioParse, what);
}

Role parse_role(const json& v, const std::string& where)
{
    if (!v.is_string()) bad(where + ": expected \"alice\" or \"bob\"");
    const auto s = v.get<std::string>();
    if (s == "alice") return Role::Alice;
    if (s == "bob") return Role::Bob;
    bad(where + ": unknown actor '" + s + "'");
}

template <class T>
void take(const json& obj, const char* key, T& out)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        bad(std::string("params.") + key + ": " + e.what());
    }
}

crypto::Preimage preimage_of(const std::string& label)
{
    return crypto::Preimage::from_span(crypto::sha256(as_bytes(label)).span());
}

}  // namespace

Scenario Scenario::parse(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(e.what());
    }
    if (!j.is_object()) bad("scenario must be an object");
    Scenario s;
    s.name = j.value("name", "unnamed");
    take(j, "seed", s.seed);
    s.sim.seed = s.seed;
    take(j, "tick_budget", s.tick_budget);
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (!p.is_object()) bad("params must be an object");
        auto& c = s.sim.channel;
        take(p, "i_bal", c.i_bal);
        take(p, "epsilon", c.epsilon);
        take(p, "T", c.T);
        take(p, "privacy_level", c.privacy_level);
        take(p, "separate_wt_outputs", c.separate_wt_outputs);
        take(p, "tower_reward", c.tower_reward);
        take(p, "fee_commitment", c.fee_commitment);
        take(p, "report_stride", c.report_stride);
        take(p, "max_gap", c.max_gap);
        take(p, "key_chain_length", c.key_chain_length);
        take(p, "step_timeout", c.step_timeout);
        take(p, "tower_interval", c.tower_interval);
        take(p, "close_fee", c.close_fee);
        take(p, "chunk_bits", c.ot.chunk_bits);
        take(p, "value_bits", c.ot.value_bits);
        take(p, "mine_every", s.sim.mine_every);
        s.sim.deposits = {c.i_bal / 2, c.i_bal - c.i_bal / 2};
        if (p.contains("deposits")) {
            const auto& d = p["deposits"];
            take(d, "alice", s.sim.deposits[0]);
            take(d, "bob", s.sim.deposits[1]);
        }
    }
    if (j.contains("actors")) {
        const auto& a = j["actors"];
        if (!a.is_object()) bad("actors must be an object");
        for (auto& [name, spec] : a.items()) {
            const auto r = parse_role(name, "actors");
            const auto i = r == Role::Alice ? 0 : 1;
            bool keep = false;
            take(spec, "keep_history", keep);
            s.sim.keep_history[i] = keep;
            if (spec.contains("tower")) {
                const auto& t = spec["tower"];
                if (t.is_boolean()) {
                    s.sim.towers[i].enabled = t.get<bool>();
                } else if (t.is_object()) {
                    s.sim.towers[i].enabled = true;
                    take(t, "collude", s.sim.towers[i].collude);
                    take(t, "keep_history", s.sim.towers[i].keep_history);
                } else {
                    bad("actors." + name + ".tower must be a boolean or an object");
                }
            }
        }
    }
    s.actions = j.value("actions", json::array());
    s.expect = j.value("expect", json::array());
    if (!s.actions.is_array() || !s.expect.is_array()) bad("actions and expect must be arrays");
    for (const auto& act : s.actions) {
        if (!act.is_object() || !act.contains("do") || !act["do"].is_string()) bad("every action needs \"do\"");
        if (act.contains("actor")) parse_role(act["actor"], "action " + act["do"].get<std::string>());
    }
    try {
        s.sim.channel.validate();
    } catch (const Error& e) {
        bad(e.what());
    }
    return s;
}

Scenario Scenario::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) bad("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string scenario_dir(const std::string& fallback)
{
    const char* env = std::getenv("OTSPC_SCENARIO_DIR");
    return env && *env ? std::string(env) : fallback;
}

// ---- running -------------------------------------------------------------

namespace {

class Runner {
public:
    explicit Runner(const Scenario& s) : s_(s), sim_(s.sim) {}

    SimReport run()
    {
        sim_.note("scenario", {{"name", s_.name}, {"seed", s_.seed}, {"level", s_.sim.channel.privacy_level}});
        sim_.open();
        for (const auto& act : s_.actions) {
            if (exhausted_) break;
            perform(act);
        }
        return report();
    }

private:
    std::uint64_t left() const { return sim_.now() >= s_.tick_budget ? 0 : s_.tick_budget - sim_.now(); }

    void settle()
    {
        if (!sim_.run_until_idle(left()) && left() == 0 && !exhausted_) {
            exhausted_ = true;
            sim_.note("budget-exhausted", {});
        }
    }

    Role actor(const json& act) const { return parse_role(act.at("actor"), act["do"].get<std::string>()); }

    void propose(Role who, const channel::UpdateOp& op)
    {
        try {
            sim_.peer(who).propose(op);
        } catch (const Error& e) {
            sim_.note("refused", {{"actor", role_name(who)}, {"op", op.describe()}, {"detail", e.what()}});
        }
        settle();
    }

    void perform(const json& act)
    {
        const auto what = act["do"].get<std::string>();
        ojson fields{{"do", what}};
        if (act.contains("actor")) fields["actor"] = act["actor"];
        sim_.note("action", fields);
        if (what == "pay") {
            const int repeat = act.value("repeat", 1);
            channel::UpdateOp op;
            op.from = actor(act);
            op.amount = act.at("amount").get<Amount>();
            for (int i = 0; i < repeat && !exhausted_; ++i) propose(op.from, op);
        } else if (what == "add_htlc") {
            channel::UpdateOp op;
            op.kind = channel::UpdateKind::AddHtlc;
            op.htlc.id = act.at("id").get<std::uint32_t>();
            op.htlc.sender = actor(act);
            op.htlc.amount = act.at("amount").get<Amount>();
            op.htlc.payment_hash = crypto::commit(preimage_of(act.at("preimage").get<std::string>()));
            op.htlc.expiry = sim_.chain().height() + act.value("expiry_in", 50u);
            propose(op.htlc.sender, op);
        } else if (what == "settle_htlc" || what == "fail_htlc") {
            channel::UpdateOp op;
            op.kind = what == "settle_htlc" ? channel::UpdateKind::SettleHtlc : channel::UpdateKind::FailHtlc;
            op.htlc_id = act.at("id").get<std::uint32_t>();
            if (act.contains("preimage")) op.preimage = preimage_of(act["preimage"].get<std::string>());
            propose(actor(act), op);
        } else if (what == "learn_preimage") {
            sim_.peer(actor(act)).learn_preimage(preimage_of(act.at("preimage").get<std::string>()));
        } else if (what == "stall") {
            channel::CheatConfig cheat;
            cheat.halt_after_step = act.at("step").get<std::uint8_t>();
            const auto then = channel::parse_adversary_action(act.value("then", std::string("idle")));
            if (!then) bad("stall: unknown follow-up action");
            cheat.action = *then;
            cheat.keep_history = s_.sim.keep_history[actor(act) == Role::Alice ? 0 : 1];
            sim_.peer(actor(act)).set_cheat(cheat);
        } else if (what == "cheat_exit" || what == "commit_only") {
            auto& p = sim_.peer(actor(act));
            const auto isn = act.value("state", p.state().isn);
            const bool assert_state = what == "cheat_exit" && act.value("assert", true);
            try {
                p.cheat_exit(isn, assert_state, act.value("assert_delay", 0u));
            } catch (const Error& e) {
                bad(what + ": " + e.what());
            }
            settle();
        } else if (what == "collude_tower") {
            auto* t = sim_.tower(actor(act));
            if (!t) bad("collude_tower: actor has no tower");
            t->set_collude(true);
        } else if (what == "offline") {
            sim_.set_offline(actor(act), act.at("ticks").get<std::uint64_t>());
        } else if (what == "close") {
            const auto mode = act.value("mode", std::string("cooperative"));
            auto& p = sim_.peer(actor(act));
            if (mode == "cooperative")
                p.cooperative_close();
            else if (mode == "unilateral")
                p.unilateral_exit();
            else
                bad("close: mode must be cooperative or unilateral");
            settle();
        } else if (what == "mine") {
            sim_.chain().mine_blocks(act.value("blocks", 1u));
            settle();
        } else if (what == "wait") {
            const auto n = std::min<std::uint64_t>(act.at("ticks").get<std::uint64_t>(), left());
            sim_.run(n);
        } else if (what == "settle") {
            settle();
        } else {
            bad("unknown action '" + what + "'");
        }
    }

    std::string key_of(const std::string& who) const
    {
        if (who == "alice" || who == "bob" || who == "alice_tower" || who == "bob_tower") return who;
        bad("unknown balance holder '" + who + "'");
    }

    SimReport report()
    {
        SimReport r;
        r.name = s_.name;
        r.seed = s_.seed;
        r.privacy_level = s_.sim.channel.privacy_level;
        r.balances["alice"] = sim_.balance(Role::Alice);
        r.balances["bob"] = sim_.balance(Role::Bob);
        r.balances["alice_tower"] = sim_.tower_balance(Role::Alice);
        r.balances["bob_tower"] = sim_.tower_balance(Role::Bob);
        const auto& chain = sim_.chain();
        for (const auto& id : chain.accepted()) r.txids.push_back({chain.find(id)->name, id.hex()});

        const auto published = [&](const std::string& prefix) {
            return std::any_of(r.txids.begin(), r.txids.end(),
                               [&](const auto& t) { return t.first.rfind(prefix, 0) == 0; });
        };
        for (const auto& e : s_.expect) {
            Assertion a;
            a.text = e.dump();
            if (e.contains("balance")) {
                const auto who = key_of(e["balance"].get<std::string>());
                const Amount have = r.balances.at(who);
                a.detail = who + " has " + std::to_string(have);
                if (e.contains("equals"))
                    a.pass = have == e["equals"].get<Amount>();
                else if (e.contains("at_least"))
                    a.pass = have >= e["at_least"].get<Amount>();
                else if (e.contains("at_most"))
                    a.pass = have <= e["at_most"].get<Amount>();
                else
                    bad("balance expectation needs equals, at_least or at_most");
            } else if (e.contains("published")) {
                a.pass = published(e["published"].get<std::string>());
            } else if (e.contains("not_published")) {
                a.pass = !published(e["not_published"].get<std::string>());
            } else if (e.contains("punished") || e.contains("expired")) {
                const bool punish = e.contains("punished");
                const auto want = (punish ? e["punished"] : e["expired"]).get<std::string>();
                std::optional<Role> got;
                for (Role p : {Role::Alice, Role::Bob}) {
                    const auto& o = sim_.peer(p).outcome();
                    const auto& v = punish ? o.punished : o.expired;
                    if (v) got = v;
                }
                a.detail = got ? role_name(*got) : "none";
                a.pass = want == a.detail;
            } else if (e.contains("phase")) {
                for (auto& [who, ph] : e["phase"].items()) {
                    const auto have = channel::phase_name(sim_.peer(parse_role(who, "phase")).phase());
                    a.detail += who + "=" + have + " ";
                    a.pass = ph.get<std::string>() == have;
                    if (!a.pass) break;
                }
            } else {
                bad("unknown expectation " + e.dump());
            }
            r.assertions.push_back(a);
        }

        r.audit = chain.audit();
        if (chain.utxo_total() + chain.fees_total() != chain.minted_total()) r.audit.push_back("value not conserved");
        for (const auto& v : sim_.violations()) r.audit.push_back("state does not add up: " + v);
        Assertion conserved;
        conserved.text = "conservation";
        conserved.pass = r.audit.empty();
        r.assertions.push_back(conserved);
        if (exhausted_) r.assertions.push_back({"tick budget", false, "ran out at tick " + std::to_string(sim_.now())});
        r.events = sim_.log();
        return r;
    }

    const Scenario& s_;
    Simulation sim_;
    bool exhausted_ = false;
};

}  // namespace

SimReport run_scenario(const Scenario& scenario)
{
    try {
        return Runner(scenario).run();
    } catch (const json::exception& e) {
        throw Error(Errc::ScenarioParse, e.what());
    }
}

}  // namespace otspc::harness
