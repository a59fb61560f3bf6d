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

#include "engine_test_util.hpp"

using namespace bftlab;
using namespace bftlab::testutil;

namespace {

/// Drives a replica through a clean chain up to `views` blocks; returns the
/// blocks. Replica 0's engine is the observer; proposals come from the
/// round-robin leaders.
struct ChainDriver {
    Net net;
    std::unique_ptr<ReplicaEngine> replica;
    std::vector<Block> blocks;  // blocks[i] has view i+1

    explicit ChainDriver(ReplicaId observer = 0)
        : replica(make_fhs_pipelined_engine(net.config_for(observer))) {
        replica->on_start();
    }

    static ReplicaId rr_leader(ViewNumber v) { return static_cast<ReplicaId>(v % 4); }

    Block make_next(ViewNumber view) {
        const BlockHash parent = blocks.empty() ? genesis_hash() : blocks.back().hash;
        ViewNumber pview = blocks.empty() ? 0 : blocks.back().view;
        QuorumCert qc = blocks.empty() ? genesis_qc()
                                       : net.quorum_qc(Phase::Generic, pview, parent);
        return net.block(rr_leader(view), view, parent, qc);
    }

    EngineResult feed_next(ViewNumber view) {
        Block b = make_next(view);
        blocks.push_back(b);
        return replica->on_message(b, b.proposer);
    }
};

}  // namespace

TEST_CASE("happy path: direct chain, two-chain commits the grandparent") {
    ChainDriver d;
    EngineResult r1 = d.feed_next(1);
    REQUIRE(votes_of(r1).size() == 1);
    CHECK(votes_of(r1)[0]->view == 1);
    CHECK(r1.commits.empty());  // genesis bootstrap: nothing to commit yet
    CHECK(d.replica->current_view() == 2);

    EngineResult r2 = d.feed_next(2);
    REQUIRE(votes_of(r2).size() == 1);
    CHECK(r2.commits.empty());  // still only two blocks

    EngineResult r3 = d.feed_next(3);
    REQUIRE(r3.commits.size() == 1);
    CHECK(r3.commits[0].block == d.blocks[0].hash);
    CHECK(r3.commits[0].height == 1);
    CHECK(r3.commits[0].trigger_view == 3);  // two views after the block

    EngineResult r4 = d.feed_next(4);
    REQUIRE(r4.commits.size() == 1);
    CHECK(r4.commits[0].block == d.blocks[1].hash);
}

TEST_CASE("votes go to the next leader and advance the view") {
    ChainDriver d;
    EngineResult r1 = d.feed_next(1);
    REQUIRE(r1.out.size() >= 1);
    bool found = false;
    for (const OutboundMessage& om : r1.out) {
        if (std::holds_alternative<VoteMsg>(om.msg)) {
            REQUIRE(om.to.has_value());
            CHECK(*om.to == 2);  // leader(view 2)
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("safe block: a view gap without an aggregate proof is rejected") {
    ChainDriver d;
    d.feed_next(1);
    d.feed_next(2);

    // Proposal for view 4 justified by the view-2 certificate: k > 1.
    QuorumCert qc2 = d.net.quorum_qc(Phase::Generic, 2, d.blocks[1].hash);
    Block gap = d.net.block(ChainDriver::rr_leader(4), 4, d.blocks[1].hash, qc2);
    EngineResult r = d.replica->on_message(gap, gap.proposer);
    CHECK(votes_of(r).empty());
    CHECK(r.commits.empty());
}

TEST_CASE("safe block: an aggregate proof bridges the same gap") {
    ChainDriver d;
    d.feed_next(1);
    d.feed_next(2);
    QuorumCert qc2 = d.net.quorum_qc(Phase::Generic, 2, d.blocks[1].hash);

    std::vector<NewViewMsg> nvs{d.net.newview(4, qc2, 0), d.net.newview(4, qc2, 1),
                                d.net.newview(4, qc2, 2)};
    Block recovery = d.net.block(ChainDriver::rr_leader(4), 4, d.blocks[1].hash,
                                 d.net.agg_qc(4, nvs));
    EngineResult r = d.replica->on_message(recovery, recovery.proposer);
    REQUIRE(votes_of(r).size() == 1);
    CHECK(votes_of(r)[0]->view == 4);
    CHECK(d.replica->current_view() == 5);
}

TEST_CASE("byzantine reuse of the grandparent certificate is refused") {
    ChainDriver d;
    d.feed_next(1);
    d.feed_next(2);
    d.feed_next(3);

    // Leader of view 4 points at block 1 using block 2's justify.
    QuorumCert stale = std::get<QuorumCert>(d.blocks[1].justify);
    Block fork = d.net.block(ChainDriver::rr_leader(4), 4, stale.block, stale);
    EngineResult r = d.replica->on_message(fork, fork.proposer);
    CHECK(votes_of(r).empty());

    // An honest continuation still works afterwards.
    EngineResult r4 = d.feed_next(4);
    CHECK(votes_of(r4).size() == 1);
}

TEST_CASE("blocks for old views are ignored") {
    ChainDriver d;
    d.feed_next(1);
    d.feed_next(2);
    d.feed_next(3);
    CHECK(d.replica->current_view() == 4);

    Block old = d.net.block(ChainDriver::rr_leader(2), 2, d.blocks[0].hash,
                            std::get<QuorumCert>(d.blocks[1].justify), /*salt=*/5);
    EngineResult r = d.replica->on_message(old, old.proposer);
    CHECK(r.out.empty());
    CHECK(r.commits.empty());
}

TEST_CASE("commit rule: only the first link must be direct") {
    // Chain views (5, 6, 10): processing the view-10 block commits view 5,
    // because its parent pair (6, 5) is direct. The 6 -> 10 gap is fine.
    ChainDriver d;
    EngineResult r;
    d.feed_next(1);
    d.feed_next(2);
    d.feed_next(3);
    d.feed_next(4);
    d.feed_next(5);
    r = d.feed_next(6);
    REQUIRE(r.commits.size() == 1);
    CHECK(r.commits[0].block_view == 4);

    // Views 7..9 fail; view 10 carries the aggregate proof over the view-6
    // certificate.
    QuorumCert qc6 = d.net.quorum_qc(Phase::Generic, 6, d.blocks.back().hash);
    std::vector<NewViewMsg> nvs{d.net.newview(10, qc6, 0), d.net.newview(10, qc6, 1),
                                d.net.newview(10, qc6, 2)};
    Block b10 = d.net.block(ChainDriver::rr_leader(10), 10, d.blocks.back().hash,
                            d.net.agg_qc(10, nvs));
    EngineResult r10 = d.replica->on_message(b10, b10.proposer);
    REQUIRE(votes_of(r10).size() == 1);
    // Parent pair (6, 5) is direct: view 5 commits (and view 6 is next).
    REQUIRE(r10.commits.size() == 1);
    CHECK(r10.commits[0].block_view == 5);

    // View 11 extends the gap block; parent pair (10, 6) is NOT direct, so
    // nothing new commits yet.
    QuorumCert qc10 = d.net.quorum_qc(Phase::Generic, 10, b10.hash);
    Block b11 = d.net.block(ChainDriver::rr_leader(11), 11, b10.hash, qc10);
    EngineResult r11 = d.replica->on_message(b11, b11.proposer);
    REQUIRE(votes_of(r11).size() == 1);
    CHECK(r11.commits.empty());

    // View 12: parent pair (11, 10) is direct again; commits 6 and 10.
    QuorumCert qc11 = d.net.quorum_qc(Phase::Generic, 11, b11.hash);
    Block b12 = d.net.block(ChainDriver::rr_leader(12), 12, b11.hash, qc11);
    EngineResult r12 = d.replica->on_message(b12, b12.proposer);
    REQUIRE(r12.commits.size() == 2);
    CHECK(r12.commits[0].block_view == 6);
    CHECK(r12.commits[1].block_view == 10);
}

TEST_CASE("equivocation: one vote per view, no matter how many proposals") {
    ChainDriver d;
    d.feed_next(1);
    Block twin_a = d.make_next(2);
    Block twin_b = d.net.block(ChainDriver::rr_leader(2), 2, d.blocks.back().hash,
                               std::get<QuorumCert>(twin_a.justify), /*salt=*/7);
    EngineResult ra = d.replica->on_message(twin_a, 2);
    CHECK(votes_of(ra).size() == 1);
    EngineResult rb = d.replica->on_message(twin_b, 2);
    CHECK(votes_of(rb).empty());
}

TEST_CASE("timeout announces a newview with the freshest certificate") {
    ChainDriver d;
    d.feed_next(1);
    d.feed_next(2);
    CHECK(d.replica->current_view() == 3);

    EngineResult to = fire_live_timer(*d.replica, 3);
    auto nvs = newviews_of(to);
    REQUIRE(nvs.size() == 1);
    CHECK(nvs[0]->view == 4);
    // Freshest certificate this replica has seen: the view-2 block's justify.
    CHECK(nvs[0]->prepare_qc.view == 1);
    CHECK(d.replica->current_view() == 3);  // waits for a quorum to move

    QuorumCert qc1 = d.net.quorum_qc(Phase::Generic, 1, d.blocks[0].hash);
    d.replica->on_message(d.net.newview(4, qc1, 1), 1);
    d.replica->on_message(d.net.newview(4, qc1, 2), 2);
    EngineResult quorum = d.replica->on_message(d.net.newview(4, qc1, 3), 3);
    CHECK(d.replica->current_view() == 4);
    (void)quorum;

    EngineResult stale = d.replica->on_timer(3);
    CHECK(stale.empty());
}

TEST_CASE("leader proposes from a vote quorum, preferring the certificate path") {
    Net net;
    auto leader = make_fhs_pipelined_engine(net.config_for(2));  // leader of view 2
    leader->on_start();

    Block b1 = net.block(1, 1, genesis_hash(), genesis_qc());
    leader->on_message(b1, 1);  // votes, enters view 2

    // Some stragglers timed out, but below quorum; the pending aggregates
    // must not outrank a completed vote quorum.
    QuorumCert none = genesis_qc();
    leader->on_message(net.newview(2, none, 0), 0);
    leader->on_message(net.newview(2, none, 1), 1);

    // Vote quorum for the view-1 block: the leader should propose with the
    // plain certificate, not the aggregate.
    leader->on_message(net.vote(Phase::Generic, 1, b1.hash, 0), 0);
    leader->on_message(net.vote(Phase::Generic, 1, b1.hash, 1), 1);
    EngineResult at_quorum = leader->on_message(net.vote(Phase::Generic, 1, b1.hash, 2), 2);
    auto proposals = proposals_of(at_quorum);
    REQUIRE(proposals.size() == 1);
    CHECK(proposals[0]->view == 2);
    CHECK(!justify_is_aggqc(proposals[0]->justify));
    CHECK(proposals[0]->parent == b1.hash);
}

TEST_CASE("leader falls back to the aggregate path after a failed view") {
    Net net;
    auto leader = make_fhs_pipelined_engine(net.config_for(2));  // leader of view 2
    leader->on_start();
    CHECK(leader->current_view() == 1);

    // View 1 produced nothing; everyone announces view 2.
    EngineResult own_timeout = fire_live_timer(*leader, 1);
    REQUIRE(newviews_of(own_timeout).size() == 1);  // broadcast announcement
    CHECK(leader->current_view() == 1);
    leader->on_message(*newviews_of(own_timeout)[0], 2);  // self-delivery
    leader->on_message(net.newview(2, genesis_qc(), 0), 0);
    EngineResult at_quorum = leader->on_message(net.newview(2, genesis_qc(), 1), 1);
    CHECK(leader->current_view() == 2);
    auto proposals = proposals_of(at_quorum);
    REQUIRE(proposals.size() == 1);
    CHECK(justify_is_aggqc(proposals[0]->justify));
    CHECK(proposals[0]->parent == genesis_hash());
    CHECK(proposals[0]->view == 2);
}

TEST_CASE("a cascade of failed views is bridged by a single aggregate") {
    ChainDriver d;
    d.feed_next(1);
    CHECK(d.replica->current_view() == 2);

    // Views 2..4 failed elsewhere; a quorum is already announcing view 5.
    QuorumCert qc1 = d.net.quorum_qc(Phase::Generic, 1, d.blocks[0].hash);
    d.replica->on_message(d.net.newview(5, qc1, 1), 1);
    d.replica->on_message(d.net.newview(5, qc1, 2), 2);
    d.replica->on_message(d.net.newview(5, qc1, 3), 3);
    CHECK(d.replica->current_view() == 5);

    std::vector<NewViewMsg> nvs{d.net.newview(5, qc1, 0), d.net.newview(5, qc1, 1),
                                d.net.newview(5, qc1, 2)};
    Block b5 = d.net.block(ChainDriver::rr_leader(5), 5, d.blocks[0].hash, d.net.agg_qc(5, nvs));
    EngineResult r = d.replica->on_message(b5, b5.proposer);
    CHECK(votes_of(r).size() == 1);
    CHECK(d.replica->current_view() == 6);
}

TEST_CASE("verification accounting: one for a certificate, two for an aggregate") {
    ChainDriver d;
    EngineResult r1 = d.feed_next(1);
    const AuditNote* verif = nullptr;
    for (const AuditNote& a : r1.audits) {
        if (a.kind == AuditNote::Kind::VerifCount && !a.build_path) verif = &a;
    }
    REQUIRE(verif != nullptr);
    CHECK(verif->delta == 1);
    CHECK(!verif->aggqc);

    QuorumCert qc1 = d.net.quorum_qc(Phase::Generic, 1, d.blocks[0].hash);
    std::vector<NewViewMsg> nvs{d.net.newview(3, qc1, 0), d.net.newview(3, qc1, 1),
                                d.net.newview(3, qc1, 2)};
    Block b3 = d.net.block(ChainDriver::rr_leader(3), 3, d.blocks[0].hash, d.net.agg_qc(3, nvs));
    EngineResult r3 = d.replica->on_message(b3, b3.proposer);
    verif = nullptr;
    for (const AuditNote& a : r3.audits) {
        if (a.kind == AuditNote::Kind::VerifCount && !a.build_path) verif = &a;
    }
    REQUIRE(verif != nullptr);
    CHECK(verif->delta == 2);
    CHECK(verif->aggqc);
}
