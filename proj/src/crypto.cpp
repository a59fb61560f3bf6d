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

#include "bftlab/crypto.hpp"

#include <algorithm>
#include <tuple>

namespace bftlab {

MockAggScheme::MockAggScheme(std::uint64_t key_seed, std::uint32_t n) {
    secrets_.reserve(n);
    std::uint64_t state = key_seed ^ 0xdeadbeefcafef00dULL;
    for (std::uint32_t i = 0; i < n; ++i) {
        secrets_.push_back(splitmix64(state));
    }
}

Digest256 MockAggScheme::mac_for(ReplicaId signer, const std::vector<std::uint8_t>& msg) const {
    Hasher h;
    h.update_str("mac");
    h.update_u64(secrets_.at(signer));
    h.update_bytes(msg);
    return h.finalize();
}

Signature MockAggScheme::sign(ReplicaId signer, const std::vector<std::uint8_t>& msg) const {
    return Signature{mac_for(signer, msg), signer};
}

bool MockAggScheme::verify(ReplicaId signer, const std::vector<std::uint8_t>& msg,
                           const Signature& sig) const {
    if (sig.signer != signer || signer >= secrets_.size()) return false;
    return sig.mac == mac_for(signer, msg);
}

std::optional<AggregateSignature> MockAggScheme::aggregate(
    const std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>>& parts) const {
    std::vector<std::pair<ReplicaId, Digest256>> entries;
    entries.reserve(parts.size());
    for (const auto& [id, msg, sig] : parts) {
        if (!verify(id, msg, sig)) return std::nullopt;
        entries.emplace_back(id, sig.mac);
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].first == entries[i - 1].first) return std::nullopt;  // duplicate signer
    }
    AggregateSignature agg;
    Hasher h;
    h.update_str("agg");
    h.update_u64(entries.size());
    for (const auto& [id, mac] : entries) {
        h.update_u32(id);
        h.update_digest(mac);
        agg.signers.push_back(id);
    }
    agg.tag = h.finalize();
    return agg;
}

bool MockAggScheme::verify_aggregate(
    const AggregateSignature& agg,
    const std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>>& claims) const {
    ++counter_;
    std::vector<std::pair<ReplicaId, Digest256>> entries;
    entries.reserve(claims.size());
    for (const auto& [id, msg] : claims) {
        if (id >= secrets_.size()) return false;
        entries.emplace_back(id, mac_for(id, msg));
    }
    std::sort(entries.begin(), entries.end());
    std::vector<ReplicaId> ids;
    ids.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].first == entries[i - 1].first) return false;
        ids.push_back(entries[i].first);
    }
    if (ids != agg.signers) return false;
    Hasher h;
    h.update_str("agg");
    h.update_u64(entries.size());
    for (const auto& [id, mac] : entries) {
        h.update_u32(id);
        h.update_digest(mac);
    }
    return h.finalize() == agg.tag;
}

KeyPair MockAggScheme::keypair(ReplicaId id) const {
    std::uint64_t secret = secrets_.at(id);
    std::uint64_t pub_state = secret ^ 0x5851f42d4c957f2dULL;
    return KeyPair{id, secret, splitmix64(pub_state)};
}

std::vector<std::uint8_t> qc_member_bytes(Phase type, ViewNumber view, const BlockHash& block,
                                          ReplicaId signer) {
    return vote_signing_bytes(type, view, block, signer);
}

std::optional<QuorumCert> build_qc(const SignatureScheme& scheme,
                                   const std::vector<VoteMsg>& votes) {
    if (votes.empty()) return std::nullopt;
    const VoteMsg& first = votes.front();
    std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>> parts;
    parts.reserve(votes.size());
    for (const VoteMsg& v : votes) {
        if (v.type != first.type || v.view != first.view || v.block != first.block) {
            return std::nullopt;  // votes are per-block, mixed sets cannot co-aggregate
        }
        parts.emplace_back(v.voter, qc_member_bytes(v.type, v.view, v.block, v.voter), v.sig);
    }
    auto agg = scheme.aggregate(parts);
    if (!agg) return std::nullopt;
    QuorumCert qc;
    qc.type = first.type;
    qc.view = first.view;
    qc.block = first.block;
    qc.sig = std::move(*agg);
    return qc;
}

bool verify_qc(const SignatureScheme& scheme, const QuorumCert& qc) {
    std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>> claims;
    claims.reserve(qc.sig.signers.size());
    for (ReplicaId id : qc.sig.signers) {
        claims.emplace_back(id, qc_member_bytes(qc.type, qc.view, qc.block, id));
    }
    return scheme.verify_aggregate(qc.sig, claims);
}

bool qc_has_quorum(const QuorumCert& qc, std::uint32_t quorum) {
    if (qc.is_genesis()) return true;
    std::vector<ReplicaId> ids = qc.sig.signers;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids.size() == qc.sig.signers.size() && ids.size() >= quorum;
}

AggQcBuildResult build_agg_qc(const SignatureScheme& scheme,
                              const std::vector<NewViewMsg>& newviews, ViewNumber view,
                              std::uint32_t quorum) {
    AggQcBuildResult result;
    std::vector<NewViewMsg> pool;
    pool.reserve(newviews.size());
    for (const NewViewMsg& nv : newviews) {
        if (nv.view != view || nv.prepare_qc.view >= view) continue;
        pool.push_back(nv);
    }
    std::sort(pool.begin(), pool.end(),
              [](const NewViewMsg& a, const NewViewMsg& b) { return a.sender < b.sender; });
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [](const NewViewMsg& a, const NewViewMsg& b) {
                               return a.sender == b.sender;
                           }),
               pool.end());

    // Protect the proposal: the member that would be extracted as highQC
    // must carry a verifiable aggregate, or the whole block gets rejected
    // downstream. Drop bad candidates and retry with the rest.
    for (;;) {
        if (pool.size() < quorum) return result;
        auto high_it = std::max_element(pool.begin(), pool.end(),
                                        [](const NewViewMsg& a, const NewViewMsg& b) {
                                            return a.prepare_qc.view < b.prepare_qc.view;
                                        });
        if (verify_qc(scheme, high_it->prepare_qc)) break;
        result.rejected_members.push_back(high_it->sender);
        pool.erase(high_it);
    }

    std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>> parts;
    AggregateQc agg;
    agg.view = view;
    for (const NewViewMsg& nv : pool) {
        parts.emplace_back(nv.sender,
                           newview_signing_bytes(nv.view, nv.prepare_qc.block, nv.sender),
                           nv.sig);
        agg.members.emplace_back(nv.sender, nv.prepare_qc);
    }
    auto outer = scheme.aggregate(parts);
    if (!outer) return result;
    agg.sig = std::move(*outer);
    result.aggqc = std::move(agg);
    return result;
}

ExtractResult extract_high_qc(const AggregateQc& agg) {
    ExtractResult out;
    bool first = true;
    for (const auto& [id, qc] : agg.members) {
        if (first || qc.view > out.high.view) {
            out.high = qc;
            first = false;
        } else if (qc.view == out.high.view && !(qc == out.high)) {
            out.equal_view_divergence = true;
        }
    }
    return out;
}

bool verify_agg_qc(const SignatureScheme& scheme, const AggregateQc& agg, std::uint32_t quorum) {
    if (agg.members.size() < quorum) return false;
    std::vector<ReplicaId> ids;
    ids.reserve(agg.members.size());
    for (const auto& [id, qc] : agg.members) {
        if (qc.view >= agg.view) return false;
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) return false;

    // Check 1: the one aggregate over the NEWVIEW tuples.
    std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>> claims;
    claims.reserve(agg.members.size());
    for (const auto& [id, qc] : agg.members) {
        claims.emplace_back(id, newview_signing_bytes(agg.view, qc.block, id));
    }
    if (!scheme.verify_aggregate(agg.sig, claims)) return false;

    // Check 2: the extracted high member only. Remaining members are vouched
    // for by the outer aggregate and stay unchecked.
    ExtractResult ex = extract_high_qc(agg);
    if (ex.equal_view_divergence) return false;
    return verify_qc(scheme, ex.high);
}

}  // namespace bftlab
