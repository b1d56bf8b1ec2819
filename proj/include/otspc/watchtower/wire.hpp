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

#include "otspc/txgraph/txgraph.hpp"

namespace otspc::watchtower {

/// Every record sent to a tower:
///
///   u32 length (of what follows) | channel id (32) | level (1) | kind (1) | payload
///
/// Integers are little-endian. Payloads by level and kind:
///
///   L1 Register  template | u8 shared
///   L1 Update    u32 threshold | commit sig (65) | punish sig (65)
///   L2 Register  empty; the channel id is a random handle
///   L2 Update    CipherPacket under P_e of an L2Packet
///   L3 Register  template
///   L3 Update    u32 index | key (32)
enum class WireKind : std::uint8_t { Register = 0, Update = 1 };

struct WireRecord {
    crypto::Hash256 channel;
    std::uint8_t level = 1;
    WireKind kind = WireKind::Register;
    Bytes payload;

    Bytes encode() const;
    /// Throws Malformed.
    static WireRecord decode(ByteSpan data);
};

struct L1Register {
    txgraph::PunishTemplate tmpl;
    /// The tower spends its client's own dispute output.
    bool shared = false;

    Bytes encode() const;
    static L1Register decode(ByteSpan data);
};

struct SignedPair {
    std::uint32_t threshold = 0;
    crypto::CovenantSignature commit;
    crypto::CovenantSignature punish;

    Bytes encode() const;
    static SignedPair decode(ByteReader& in);
};

/// Plaintext of a level-2 packet. Fixed size for fixed OT parameters.
struct L2Packet {
    txgraph::PunishTemplate tmpl;
    chain::Txid setup;
    Amount epsilon = 0;
    Bytes nonce;
    crypto::CovenantSignature anchor;
    SignedPair pair;

    static constexpr std::size_t kNonceSize = 16;
    Bytes encode() const;
    static L2Packet decode(ByteSpan data);
};

struct L3Update {
    std::uint32_t index = 0;
    crypto::Hash256 key;

    Bytes encode() const;
    static L3Update decode(ByteSpan data);
};

/// The 130 bytes inside a CommitExit slot.
struct L3Slot {
    crypto::CovenantSignature commit;
    crypto::CovenantSignature punish;

    Bytes encode() const;
    static L3Slot decode(ByteSpan data);
};

}  // namespace otspc::watchtower
