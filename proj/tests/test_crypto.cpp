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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/crypto.hpp"
#include "bftlab/types.hpp"

using namespace bftlab;

namespace {

std::vector<std::uint8_t> bytes_of(const char* s) {
    return std::vector<std::uint8_t>(s, s + std::char_traits<char>::length(s));
}

VoteMsg vote_for(const MockAggScheme& scheme, Phase type, ViewNumber view,
                 const BlockHash& block, ReplicaId voter) {
    VoteMsg v;
    v.type = type;
    v.view = view;
    v.block = block;
    v.voter = voter;
    v.sig = scheme.sign(voter, vote_signing_bytes(type, view, block, voter));
    return v;
}

NewViewMsg newview_from(const MockAggScheme& scheme, ViewNumber view, const QuorumCert& qc,
                        ReplicaId sender) {
    NewViewMsg nv;
    nv.view = view;
    nv.prepare_qc = qc;
    nv.sender = sender;
    nv.sig = scheme.sign(sender, newview_signing_bytes(view, qc.block, sender));
    return nv;
}

QuorumCert qc_over(const MockAggScheme& scheme, Phase type, ViewNumber view,
                   const BlockHash& block, const std::vector<ReplicaId>& voters) {
    std::vector<VoteMsg> votes;
    for (ReplicaId id : voters) votes.push_back(vote_for(scheme, type, view, block, id));
    auto qc = build_qc(scheme, votes);
    REQUIRE(qc.has_value());
    return *qc;
}

BlockHash hash_of(const char* tag) {
    Hasher h;
    h.update_str(tag);
    return h.finalize();
}

}  // namespace

TEST_CASE("sign / verify round trip and negatives") {
    MockAggScheme scheme(1, 4);
    auto msg = bytes_of("hello");
    Signature sig = scheme.sign(2, msg);
    CHECK(scheme.verify(2, msg, sig));
    CHECK(!scheme.verify(2, bytes_of("hellO"), sig));
    CHECK(!scheme.verify(3, msg, sig));  // wrong public key
    Signature other = sig;
    other.signer = 3;
    CHECK(!scheme.verify(3, msg, other));
}

TEST_CASE("aggregate: quorum of votes on one tuple") {
    MockAggScheme scheme(1, 4);
    BlockHash b = hash_of("block");
    std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>> parts;
    for (ReplicaId id : {0u, 1u, 2u}) {
        auto msg = vote_signing_bytes(Phase::Generic, 5, b, id);
        parts.emplace_back(id, msg, scheme.sign(id, msg));
    }
    auto agg = scheme.aggregate(parts);
    REQUIRE(agg.has_value());
    std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>> claims;
    for (const auto& [id, msg, sig] : parts) claims.emplace_back(id, msg);
    CHECK(scheme.verify_aggregate(*agg, claims));

    SUBCASE("duplicate signer rejected at aggregation") {
        parts.push_back(parts.front());
        CHECK(!scheme.aggregate(parts).has_value());
    }
    SUBCASE("tampered message fails") {
        claims[1].second[0] ^= 1;
        CHECK(!scheme.verify_aggregate(*agg, claims));
    }
    SUBCASE("dropped pair fails") {
        claims.pop_back();
        CHECK(!scheme.verify_aggregate(*agg, claims));
    }
    SUBCASE("counter increments exactly once per call") {
        std::uint64_t before = scheme.aggregate_verifications();
        scheme.verify_aggregate(*agg, claims);
        CHECK(scheme.aggregate_verifications() == before + 1);
    }
}

TEST_CASE("aggregate over distinct messages (newview tuples)") {
    MockAggScheme scheme(9, 4);
    QuorumCert qc5 = qc_over(scheme, Phase::Prepare, 5, hash_of("b5"), {0, 1, 2});
    QuorumCert qc7 = qc_over(scheme, Phase::Prepare, 7, hash_of("b7"), {1, 2, 3});

    std::vector<NewViewMsg> nvs{newview_from(scheme, 8, qc5, 0), newview_from(scheme, 8, qc7, 1),
                                newview_from(scheme, 8, qc5, 2)};
    AggQcBuildResult built = build_agg_qc(scheme, nvs, 8, 3);
    REQUIRE(built.aggqc.has_value());
    CHECK(verify_agg_qc(scheme, *built.aggqc, 3));

    SUBCASE("tampering one member invalidates the outer aggregate") {
        AggregateQc broken = *built.aggqc;
        broken.members[0].second.block = hash_of("elsewhere");
        CHECK(!verify_agg_qc(scheme, broken, 3));
    }
}

TEST_CASE("unforgeability: aggregates never verify for unsigned pairs") {
    MockAggScheme scheme(123, 7);
    DetRng rng(99);
    for (int round = 0; round < 200; ++round) {
        std::vector<std::tuple<ReplicaId, std::vector<std::uint8_t>, Signature>> parts;
        std::vector<std::pair<ReplicaId, std::vector<std::uint8_t>>> claims;
        std::set<ReplicaId> used;
        int k = 1 + static_cast<int>(rng.below(4));
        for (int i = 0; i < k; ++i) {
            ReplicaId id = static_cast<ReplicaId>(rng.below(7));
            if (!used.insert(id).second) continue;
            std::vector<std::uint8_t> msg{static_cast<std::uint8_t>(rng.below(250)),
                                          static_cast<std::uint8_t>(rng.below(250))};
            parts.emplace_back(id, msg, scheme.sign(id, msg));
            claims.emplace_back(id, msg);
        }
        if (claims.empty()) continue;
        auto agg = scheme.aggregate(parts);
        REQUIRE(agg.has_value());
        REQUIRE(scheme.verify_aggregate(*agg, claims));
        // Perturb one claimed message; the pair was never signed.
        auto bad = claims;
        bad[rng.below(bad.size())].second.push_back(0xFF);
        CHECK(!scheme.verify_aggregate(*agg, bad));
    }
}

TEST_CASE("genesis certificate verifies as the empty aggregate") {
    MockAggScheme scheme(5, 4);
    std::uint64_t before = scheme.aggregate_verifications();
    CHECK(verify_qc(scheme, genesis_qc()));
    CHECK(scheme.aggregate_verifications() == before + 1);
    CHECK(qc_has_quorum(genesis_qc(), 3));
}

TEST_CASE("keypairs are per-replica and deterministic") {
    MockAggScheme a(77, 4), b(77, 4), c(78, 4);
    CHECK(a.keypair(1).secret == b.keypair(1).secret);
    CHECK(a.keypair(1).public_key == b.keypair(1).public_key);
    CHECK(a.keypair(1).secret != a.keypair(2).secret);
    CHECK(a.keypair(1).secret != c.keypair(1).secret);
}
