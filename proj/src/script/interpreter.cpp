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

#include "otspc/script/interpreter.hpp"

namespace otspc::script {

const char* script_error_name(ScriptError e)
{
    switch (e) {
    case ScriptError::Ok: return "Ok";
    case ScriptError::StackUnderflow: return "StackUnderflow";
    case ScriptError::SigInvalid: return "SigInvalid";
    case ScriptError::HashMismatch: return "HashMismatch";
    case ScriptError::SeqNotMatured: return "SeqNotMatured";
    case ScriptError::ValueMismatch: return "ValueMismatch";
    case ScriptError::BadNesting: return "BadNesting";
    case ScriptError::LocktimeNotReached: return "LocktimeNotReached";
    case ScriptError::Expired: return "Expired";
    case ScriptError::OpReturnExecuted: return "OpReturnExecuted";
    case ScriptError::BadEncoding: return "BadEncoding";
    case ScriptError::EvalFalse: return "EvalFalse";
    }
    return "?";
}

std::string ExecResult::describe() const
{
    if (ok()) return "Ok";
    std::string s = script_error_name(error);
    if (!op.empty()) s += "-at-" + op + "#" + std::to_string(op_index);
    return s;
}

namespace {

class Machine {
public:
    Machine(const Script& script, std::vector<Bytes> stack, const ExecContext& ctx)
        : script_(script), stack_(std::move(stack)), ctx_(ctx)
    {
    }

    ExecResult run()
    {
        if (!well_nested(script_)) return {ScriptError::BadNesting, 0, "IF"};
        for (pc_ = 0; pc_ < script_.size(); ++pc_) {
            const auto& o = script_[pc_];
            if (!executing() && !is_flow(o)) continue;
            auto err = std::visit([this](const auto& x) { return step(x); }, o);
            if (err != ScriptError::Ok) return {err, pc_, op_name(o)};
        }
        if (!stack_.empty() && !truthy(stack_.back())) return {ScriptError::EvalFalse, kEnd, {}};
        return {};
    }

private:
    static constexpr std::size_t kEnd = static_cast<std::size_t>(-1);
    using E = ScriptError;

    static bool is_flow(const ScriptOp& o)
    {
        return std::holds_alternative<op::If>(o) || std::holds_alternative<op::Else>(o)
               || std::holds_alternative<op::EndIf>(o);
    }

    bool executing() const
    {
        for (bool b : branches_)
            if (!b) return false;
        return true;
    }

    bool pop(Bytes& out)
    {
        if (stack_.empty()) return false;
        out = std::move(stack_.back());
        stack_.pop_back();
        return true;
    }

    E step(const op::PushBytes& o)
    {
        stack_.push_back(o.data);
        return E::Ok;
    }
    E step(const op::PushInt& o)
    {
        stack_.push_back(encode_int(o.value));
        return E::Ok;
    }
    E step(const op::Dup&)
    {
        if (stack_.empty()) return E::StackUnderflow;
        stack_.push_back(stack_.back());
        return E::Ok;
    }
    E step(const op::If&)
    {
        if (!executing()) {
            branches_.push_back(false);
            return E::Ok;
        }
        Bytes cond;
        if (!pop(cond)) return E::StackUnderflow;
        branches_.push_back(truthy(cond));
        return E::Ok;
    }
    E step(const op::Else&)
    {
        // An Else inside a skipped outer branch must stay skipped.
        bool outer = true;
        for (std::size_t i = 0; i + 1 < branches_.size(); ++i) outer = outer && branches_[i];
        branches_.back() = outer && !branches_.back();
        return E::Ok;
    }
    E step(const op::EndIf&)
    {
        branches_.pop_back();
        return E::Ok;
    }
    E step(const op::Verify&)
    {
        Bytes v;
        if (!pop(v)) return E::StackUnderflow;
        return truthy(v) ? E::Ok : E::ValueMismatch;
    }
    E step(const op::LessThan&)
    {
        Bytes b, a;
        if (!pop(b) || !pop(a)) return E::StackUnderflow;
        auto x = decode_int(a);
        auto y = decode_int(b);
        if (!x || !y) return E::BadEncoding;
        stack_.push_back(encode_bool(*x < *y));
        return E::Ok;
    }
    E step(const op::CovenantCheck& o)
    {
        Bytes sig;
        if (!pop(sig)) return E::StackUnderflow;
        if (!ctx_.signers || !ctx_.signers->verify_covenant(o.keyset, ctx_.sighash, o.path, sig)) return E::SigInvalid;
        return E::Ok;
    }
    E step(const op::CSigV& o)
    {
        Bytes sig;
        if (!pop(sig)) return E::StackUnderflow;
        if (!ctx_.signers || !ctx_.signers->verify_single(o.key, ctx_.sighash, sig)) return E::SigInvalid;
        return E::Ok;
    }
    E step(const op::CSeqV& o) { return ctx_.confirmations >= o.blocks ? E::Ok : E::SeqNotMatured; }
    E step(const op::CLockV& o) { return ctx_.height >= o.height ? E::Ok : E::LocktimeNotReached; }
    E step(const op::CBeforeV& o) { return ctx_.height < o.height ? E::Ok : E::Expired; }
    E step(const op::CHashV& o)
    {
        Bytes v;
        if (!pop(v)) return E::StackUnderflow;
        return crypto::hash160(v) == o.digest ? E::Ok : E::HashMismatch;
    }
    E step(const op::CValV& o)
    {
        Bytes v;
        if (!pop(v)) return E::StackUnderflow;
        auto x = decode_int(v);
        return (x && *x == o.value) ? E::Ok : E::ValueMismatch;
    }
    E step(const op::OTCSigV& o)
    {
        if (o.keys.empty()) return E::SigInvalid;
        std::optional<std::uint32_t> value;
        for (const auto& key : o.keys) {
            Bytes raw;
            if (!pop(raw)) return E::StackUnderflow;
            auto sig = crypto::OTSignature::parse(raw, key.params);
            if (!sig) return E::SigInvalid;
            auto m = crypto::ots_recover_value(key, *sig);
            if (!m) return E::SigInvalid;
            if (value && *value != *m) return E::ValueMismatch;
            value = m;
        }
        stack_.push_back(encode_int(*value));
        return E::Ok;
    }
    E step(const op::OpReturn&) { return E::OpReturnExecuted; }

    const Script& script_;
    std::vector<Bytes> stack_;
    const ExecContext& ctx_;
    std::vector<bool> branches_;
    std::size_t pc_ = 0;
};

}  // namespace

ExecResult execute(const Script& script, std::vector<Bytes> stack, const ExecContext& ctx)
{
    return Machine(script, std::move(stack), ctx).run();
}

}  // namespace otspc::script
