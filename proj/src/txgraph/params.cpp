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

#include "otspc/txgraph/params.hpp"

namespace otspc::txgraph {

void ChannelParams::validate() const
{
    auto fail = [](const char* what) { throw Error(Errc::InvalidParams, what); };
    if (i_bal <= 0) fail("I_BAL must be positive");
    if (epsilon <= 0) fail("epsilon must be positive");
    if (T < 1) fail("T must be at least one block");
    if (privacy_level < 1 || privacy_level > 3) fail("privacy level must be 1, 2 or 3");
    if (tower_reward < 0 || tower_reward > epsilon) fail("tower reward must lie in [0, epsilon]");
    if (fee_commitment < 0 || fee_commitment >= i_bal) fail("fee commitment out of range");
    if (privacy_level >= 2 && anchor_nonce.empty()) fail("levels 2 and 3 need an anchor nonce");
    if (!(k_a.params == k_b.params)) fail("OT keys use different parameters");
}

Amount ChannelParams::connector_total() const
{
    // Unilateral exit 3e, two owner dispute outputs 2e each, two tower
    // dispute outputs 2e each when present.
    Amount total = 3 * epsilon + 4 * epsilon;
    if (has_wt_outputs()) total += 4 * epsilon;
    return total;
}

Amount StateSnapshot::htlc_total() const
{
    Amount sum = 0;
    for (const auto& h : htlcs) sum += h.amount;
    return sum;
}

bool StateSnapshot::conserves(const ChannelParams& p) const
{
    if (a_bal < 0 || b_bal < 0) return false;
    for (const auto& h : htlcs)
        if (h.amount <= 0) return false;
    return a_bal + b_bal + htlc_total() + p.fee_commitment == p.i_bal;
}

}  // namespace otspc::txgraph
