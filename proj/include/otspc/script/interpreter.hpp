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

#include "otspc/script/script.hpp"

#include <string>

namespace otspc::script {

enum class ScriptError {
    Ok,
    StackUnderflow,
    SigInvalid,
    HashMismatch,
    SeqNotMatured,
    ValueMismatch,
    BadNesting,
    LocktimeNotReached,
    Expired,
    OpReturnExecuted,
    BadEncoding,
    EvalFalse,
};

const char* script_error_name(ScriptError e);

struct ExecContext {
    crypto::Hash256 sighash;
    std::uint32_t input_index = 0;
    std::uint32_t height = 0;
    std::uint32_t confirmations = 0;
    const crypto::SignerRegistry* signers = nullptr;
    /// OP_RETURN payloads carried by the spending transaction.
    std::vector<Bytes> op_returns;
};

struct ExecResult {
    ScriptError error = ScriptError::Ok;
    /// Index and name of the first failing op; npos for end-of-script checks.
    std::size_t op_index = static_cast<std::size_t>(-1);
    std::string op;

    bool ok() const { return error == ScriptError::Ok; }
    std::string describe() const;
};

/// `stack` is the initial witness stack; its last element is the top.
ExecResult execute(const Script& script, std::vector<Bytes> stack, const ExecContext& ctx);

}  // namespace otspc::script
