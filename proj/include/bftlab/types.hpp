/*
   Copyright 2026 The bftlab Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bftlab/digest.hpp"

namespace bftlab {

using ReplicaId = std::uint32_t;
using ViewNumber = std::uint64_t;
using SimTime = std::int64_t;
using BlockHash = Digest256;

constexpr ViewNumber kGenesisView = 0;

/// Certificate / vote phase tag. Chained protocols use Generic only;
/// the three-phase protocol distinguishes Prepare and Precommit.
enum class Phase : std::uint8_t {
    Prepare = 1,
    Precommit = 2,
    Generic = 3,
};

const char* phase_name(Phase p);

struct Signature {
    Digest256 mac{};
    ReplicaId signer = 0;

    auto operator<=>(const Signature&) const = default;
};

/// Multi-message aggregate: one tag plus the claimed signer set (sorted).
struct AggregateSignature {
    Digest256 tag{};
    std::vector<ReplicaId> signers;

    auto operator<=>(const AggregateSignature&) const = default;
};

struct QuorumCert {
    Phase type = Phase::Generic;
    ViewNumber view = 0;
    BlockHash block{};
    AggregateSignature sig;

    auto operator<=>(const QuorumCert&) const = default;

    /// The genesis certificate: view 0, no signers, universally valid.
    bool is_genesis() const { return view == kGenesisView && sig.signers.empty(); }

    Digest256 digest() const;
};

/// 2f+1 quorum certificates lifted out of NEWVIEW messages, plus one
/// aggregate over the NEWVIEW tuples themselves.
struct AggregateQc {
    ViewNumber view = 0;  // the view the NEWVIEW senders were entering
    std::vector<std::pair<ReplicaId, QuorumCert>> members;  // sorted by id
    AggregateSignature sig;

    auto operator<=>(const AggregateQc&) const = default;

    Digest256 digest() const;
};

using Justify = std::variant<QuorumCert, AggregateQc>;

bool justify_is_aggqc(const Justify& j);
ViewNumber justify_view(const Justify& j);  // QC view, or max member view
Digest256 justify_digest(const Justify& j);

struct Payload {
    std::uint32_t tx_count = 0;
    std::uint64_t nominal_bytes = 0;
    Digest256 digest{};

    auto operator<=>(const Payload&) const = default;
};

Payload make_payload(ViewNumber view, ReplicaId proposer, std::uint32_t tx_count,
                     std::uint64_t nominal_bytes, std::uint64_t salt);

struct Block {
    ViewNumber view = 0;
    ReplicaId proposer = 0;
    Payload payload;
    BlockHash parent{};
    Justify justify = QuorumCert{};
    Signature proposer_sig{};
    BlockHash hash{};

    bool operator==(const Block& o) const {
        return view == o.view && proposer == o.proposer && payload == o.payload &&
               parent == o.parent && justify == o.justify && hash == o.hash;
    }
};

/// Canonical hash over (view, proposer, parent, payload digest, justify digest).
BlockHash compute_block_hash(const Block& b);

const Block& genesis_block();
const BlockHash& genesis_hash();
const QuorumCert& genesis_qc();

struct VoteMsg {
    Phase type = Phase::Generic;
    ViewNumber view = 0;
    BlockHash block{};
    ReplicaId voter = 0;
    Signature sig{};
};

struct NewViewMsg {
    ViewNumber view = 0;        // the view the sender is moving into
    QuorumCert prepare_qc;      // sender's highest certificate
    ReplicaId sender = 0;
    Signature sig{};
};

/// Carrier for a bare certificate: phase QC broadcasts in the three-phase
/// protocol, and the leader-to-leader forward in the baseline.
struct QcMsg {
    QuorumCert qc;
    ReplicaId sender = 0;
};

struct FetchRequest {
    BlockHash want{};
    ReplicaId requester = 0;
};

struct FetchResponse {
    Block block;
};

using Message = std::variant<Block, VoteMsg, NewViewMsg, QcMsg, FetchRequest, FetchResponse>;

const char* message_type_name(const Message& m);
ViewNumber message_view(const Message& m);

// ---- canonical byte encodings (documented in README; stable within a version)

std::vector<std::uint8_t> vote_signing_bytes(Phase type, ViewNumber view,
                                             const BlockHash& block, ReplicaId voter);
std::vector<std::uint8_t> newview_signing_bytes(ViewNumber view, const BlockHash& qc_block,
                                                ReplicaId sender);
std::vector<std::uint8_t> proposal_signing_bytes(const BlockHash& block_hash);

}  // namespace bftlab
