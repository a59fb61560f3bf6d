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
#include <memory>
#include <optional>
#include <vector>

#include "bftlab/types.hpp"

namespace bftlab {

struct KeyPair {
    ReplicaId replica = 0;
    std::uint64_t secret = 0;
    std::uint64_t public_key = 0;
};

/// Pluggable signature scheme with multi-message aggregation. Verification
/// of aggregates bumps a per-instance counter; the instrumentation is part
/// of the interface contract, not an implementation detail.
class SignatureScheme {
  public:
    virtual ~SignatureScheme() = default;

    virtual Signature sign(ReplicaId signer, const std::vector<std::uint8_t>& msg) const = 0;
    virtual bool verify(ReplicaId signer, const std::vector<std::uint8_t>& msg,
                        const Signature& sig) const = 0;

    /// Pairs must have distinct signers; returns nullopt on a duplicate.
    virtual std::optional<AggregateSignature> aggregate(
        const std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>>& parts)
        const = 0;

    /// True iff the aggregate was formed over exactly these (signer, msg)
    /// pairs. Always increments the aggregate-verification counter by one.
    virtual bool verify_aggregate(
        const AggregateSignature& agg,
        const std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>>& claims) const = 0;

    virtual std::uint64_t aggregate_verifications() const = 0;
    virtual void reset_counter() = 0;

    virtual KeyPair keypair(ReplicaId id) const = 0;
    virtual std::uint32_t replica_count() const = 0;
};

/// Default deterministic scheme: per-signer keyed MAC, aggregate = digest of
/// the sorted (signer, mac) list. Unforgeable by construction inside the
/// simulator because strategies can only reach sign() through their own id.
class MockAggScheme final : public SignatureScheme {
  public:
    MockAggScheme(std::uint64_t key_seed, std::uint32_t n);

    Signature sign(ReplicaId signer, const std::vector<std::uint8_t>& msg) const override;
    bool verify(ReplicaId signer, const std::vector<std::uint8_t>& msg,
                const Signature& sig) const override;
    std::optional<AggregateSignature> aggregate(
        const std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>>& parts)
        const override;
    bool verify_aggregate(
        const AggregateSignature& agg,
        const std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>>& claims) const override;

    std::uint64_t aggregate_verifications() const override { return counter_; }
    void reset_counter() override { counter_ = 0; }

    KeyPair keypair(ReplicaId id) const override;
    std::uint32_t replica_count() const override {
        return static_cast<std::uint32_t>(secrets_.size());
    }

  private:
    Digest256 mac_for(ReplicaId signer, const std::vector<std::uint8_t>& msg) const;

    std::vector<std::uint64_t> secrets_;
    mutable std::uint64_t counter_ = 0;
};

using SchemePtr = std::shared_ptr<SignatureScheme>;

// ---- certificate helpers built on the scheme

/// Per-signer message a vote signature covers; QC aggregates are formed
/// and verified against exactly these.
std::vector<std::uint8_t> qc_member_bytes(Phase type, ViewNumber view, const BlockHash& block,
                                          ReplicaId signer);

/// Build a QC from matching votes (same type/view/block). Returns nullopt
/// on mixed votes or duplicate voters.
std::optional<QuorumCert> build_qc(const SignatureScheme& scheme,
                                   const std::vector<VoteMsg>& votes);

/// Verify a QC's aggregate (one counted verification). Genesis QC included:
/// it verifies as an aggregate over zero pairs. Quorum size is NOT checked
/// here; callers gate on quorum separately.
bool verify_qc(const SignatureScheme& scheme, const QuorumCert& qc);

bool qc_has_quorum(const QuorumCert& qc, std::uint32_t quorum);

struct AggQcBuildResult {
    std::optional<AggregateQc> aggqc;
    std::vector<ReplicaId> rejected_members;  // newviews dropped before counting
};

/// Aggregate 2f+1 NEWVIEW messages into an AggregateQc. NEWVIEW signatures
/// must already be checked by the caller; the would-be high member's QC is
/// verified here (one counted verification) and dropped if invalid.
AggQcBuildResult build_agg_qc(const SignatureScheme& scheme,
                              const std::vector<NewViewMsg>& newviews, ViewNumber view,
                              std::uint32_t quorum);

struct ExtractResult {
    QuorumCert high;
    bool equal_view_divergence = false;  // equal-view members that differ byte-wise
};

/// The member with the highest view. Equal-view members must be identical;
/// divergence is surfaced as evidence, never silently resolved.
ExtractResult extract_high_qc(const AggregateQc& agg);

/// Exactly two counted aggregate verifications: the outer aggregate over the
/// NEWVIEW tuples, then the extracted high member. Other members are not
/// signature-checked.
bool verify_agg_qc(const SignatureScheme& scheme, const AggregateQc& agg, std::uint32_t quorum);

}  // namespace bftlab
