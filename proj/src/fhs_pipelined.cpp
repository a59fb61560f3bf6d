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

#include <map>
#include <set>

#include "bftlab/engine.hpp"

namespace bftlab {

namespace {

/// Pipelined two-chain engine: one generic vote type per view, proposals
/// justified by a single QC on the happy path or an AggregateQc after a
/// failed view, commit on a two-chain whose first link is direct.
class FhsPipelinedEngine final : public EngineBase {
  public:
    explicit FhsPipelinedEngine(EngineConfig cfg) : EngineBase(std::move(cfg)) {}

    EngineResult on_start() override {
        EngineResult r;
        enter_view(1, "start", r);
        if (leader(1) == cfg_.id) {
            // Genesis bootstrap is a plain happy-path proposal: the genesis
            // certificate has view 0, so view 1 satisfies the direct link.
            broadcast_proposal(make_block(1, genesis_hash(), high_qc_), r);
        }
        return r;
    }

    EngineResult on_message(const Message& m, ReplicaId from) override {
        EngineResult r;
        if (const auto* b = std::get_if<Block>(&m)) {
            handle_proposal(*b, from, r);
        } else if (const auto* v = std::get_if<VoteMsg>(&m)) {
            handle_vote(*v, r);
        } else if (const auto* nv = std::get_if<NewViewMsg>(&m)) {
            handle_newview(*nv, r);
        } else if (const auto* fr = std::get_if<FetchRequest>(&m)) {
            serve_fetch(*fr, r);
        } else if (const auto* fresp = std::get_if<FetchResponse>(&m)) {
            handle_fetch_response(*fresp, from, r);
        }
        return r;
    }

    // Timer fires announce the move; the view itself changes on a quorum of
    // announcements (or on certified progress). See the basic engine.
    EngineResult on_timer(ViewNumber view) override {
        EngineResult r;
        if (!timer_fire_is_live(view)) return r;
        backoff_.on_failure();
        r.out.push_back(OutboundMessage{make_newview(view + 1, high_qc_), std::nullopt});
        arm_timer(r);
        return r;
    }

  private:
    void enter_view(ViewNumber v, const char* reason, EngineResult& r) {
        if (v <= cur_view_) return;
        cur_view_ = v;
        if (reason[0] != 't' && reason[0] != 'c') backoff_.on_success();
        arm_timer(r);
        AuditNote a;
        a.kind = AuditNote::Kind::ViewEnter;
        a.view = v;
        a.code = reason;
        r.audits.push_back(a);
        // Garbage-collect stale buffers.
        while (!pending_votes_.empty() && pending_votes_.begin()->first + 1 < cur_view_) {
            pending_votes_.erase(pending_votes_.begin());
        }
        while (!pending_newviews_.empty() && pending_newviews_.begin()->first < cur_view_) {
            pending_newviews_.erase(pending_newviews_.begin());
        }
    }

    void maybe_adopt_qc(const QuorumCert& qc, EngineResult& r) {
        if (qc.view > high_qc_.view) high_qc_ = qc;
        if (qc.view + 1 > cur_view_) {
            enter_view(qc.view + 1, "qc", r);
            try_propose(r);
        }
    }

    void broadcast_proposal(Block b, EngineResult& r) {
        proposed_views_.insert(b.view);
        r.out.push_back(OutboundMessage{std::move(b), std::nullopt});
    }

    void try_propose(EngineResult& r) {
        ViewNumber v = cur_view_;
        if (leader(v) != cfg_.id || proposed_views_.count(v)) return;

        // Happy path first: a quorum of votes from the previous view yields
        // the smaller QC proposal.
        auto vit = pending_votes_.find(v - 1);
        if (vit != pending_votes_.end()) {
            for (const auto& [block, votes] : vit->second) {
                if (votes.size() < quorum()) continue;
                std::vector<VoteMsg> vs;
                vs.reserve(votes.size());
                for (const auto& [voter, vote] : votes) vs.push_back(vote);
                if (auto qc = build_qc(scheme(), vs)) {
                    if (qc->view > high_qc_.view) high_qc_ = *qc;
                    broadcast_proposal(make_block(v, qc->block, *qc), r);
                    return;
                }
            }
        }

        auto nit = pending_newviews_.find(v);
        if (nit != pending_newviews_.end() && nit->second.size() >= quorum()) {
            std::vector<NewViewMsg> nvs;
            nvs.reserve(nit->second.size());
            for (const auto& [sender, nv] : nit->second) nvs.push_back(nv);
            std::uint64_t before = scheme().aggregate_verifications();
            AggQcBuildResult built = build_agg_qc(scheme(), nvs, v, quorum());
            AuditNote a;
            a.kind = AuditNote::Kind::VerifCount;
            a.delta = static_cast<std::uint32_t>(scheme().aggregate_verifications() - before);
            a.aggqc = true;
            a.build_path = true;
            r.audits.push_back(a);
            if (!built.aggqc) return;  // quorum lost to bad members, keep waiting
            ExtractResult ex = extract_high_qc(*built.aggqc);
            if (ex.high.view > high_qc_.view) high_qc_ = ex.high;
            broadcast_proposal(make_block(v, ex.high.block, std::move(*built.aggqc)), r);
        }
    }

    void handle_vote(const VoteMsg& v, EngineResult& r) {
        if (v.type != Phase::Generic || !check_vote(v)) return;
        if (v.view + 1 < cur_view_) return;  // can no longer lead the view it feeds
        if (v.view > cur_view_ + cfg_.buffer_horizon) return;
        pending_votes_[v.view][v.block].emplace(v.voter, v);
        // A vote quorum certifies the block; that is enough to move even if
        // the block itself has not arrived yet.
        auto& votes = pending_votes_[v.view][v.block];
        if (votes.size() >= quorum() && leader(v.view + 1) == cfg_.id &&
            cur_view_ <= v.view + 1) {
            enter_view(v.view + 1, "qc", r);
        }
        try_propose(r);
    }

    void handle_newview(const NewViewMsg& nv, EngineResult& r) {
        if (!check_newview(nv)) return;
        note_view_claim(nv.sender, nv.view);
        ViewNumber target = catchup_target();
        if (target > cur_view_) {
            r.out.push_back(OutboundMessage{make_newview(target, high_qc_), std::nullopt});
            enter_view(target, "catchup", r);
        }
        if (nv.view < cur_view_) return;
        if (nv.view > cur_view_ + cfg_.buffer_horizon) return;
        pending_newviews_[nv.view].emplace(nv.sender, nv);
        if (nv.view > cur_view_ && pending_newviews_[nv.view].size() >= quorum()) {
            enter_view(nv.view, "timeout", r);  // quorum of announcements
        }
        try_propose(r);
    }

    /// PipelinedSafeBlock: QC proposals must sit exactly one view above their
    /// certificate; AggQc proposals must extend the extracted high block.
    bool safe_block(const Block& b, const QuorumCert& justify_high, bool aggqc) const {
        if (b.view < cur_view_) return false;
        if (!aggqc) {
            return b.view == justify_high.view + 1 && b.parent == justify_high.block;
        }
        return b.parent == justify_high.block;
    }

    void handle_proposal(const Block& b, ReplicaId from, EngineResult& r) {
        if (!check_block_shell(b)) return;
        if (b.view < cur_view_) return;  // old view
        if (seen_blocks_.count(b.hash)) return;

        bool aggqc = justify_is_aggqc(b.justify);
        QuorumCert high;
        std::uint64_t before = scheme().aggregate_verifications();
        bool valid;
        if (!aggqc) {
            const auto& qc = std::get<QuorumCert>(b.justify);
            valid = qc.view < b.view && qc_has_quorum(qc, quorum()) && verify_qc(scheme(), qc);
            high = qc;
        } else {
            const auto& agg = std::get<AggregateQc>(b.justify);
            valid = agg.view == b.view && verify_agg_qc(scheme(), agg, quorum());
            ExtractResult ex = extract_high_qc(agg);
            if (ex.equal_view_divergence) {
                note_violation(r, "aggqc_equal_view_divergence",
                               "equal-view members differ in AggQC for view " +
                                   std::to_string(b.view));
            }
            high = ex.high;
            valid = valid && qc_has_quorum(high, quorum());
            if (valid) {
                AuditNote a;
                a.kind = AuditNote::Kind::AggQcExtract;
                a.view = b.view;
                a.aux_view = high.view;
                a.block = high.block;
                r.audits.push_back(a);
            }
        }
        AuditNote vc;
        vc.kind = AuditNote::Kind::VerifCount;
        vc.view = b.view;
        vc.block = b.hash;
        vc.delta = static_cast<std::uint32_t>(scheme().aggregate_verifications() - before);
        vc.aggqc = aggqc;
        r.audits.push_back(vc);
        if (!valid) return;

        seen_blocks_.insert(b.hash);
        bool safe = safe_block(b, high, aggqc);
        maybe_adopt_qc(high, r);

        if (safe && b.view > last_voted_view_) {
            last_voted_view_ = b.view;
            insert_with_fetch(b, from, r);
            r.out.push_back(
                OutboundMessage{make_vote(Phase::Generic, b.view, b.hash), leader(b.view + 1)});
            enter_view(b.view + 1, "vote", r);
            schedule_commit_check(b.hash, b.view, r);
        } else if (safe) {
            insert_with_fetch(b, from, r);
            schedule_commit_check(b.hash, b.view, r);
        }
        // Unsafe blocks are dropped: they can never gather an honest quorum,
        // and their certificates were already folded into high_qc above.
        try_propose(r);
    }

    /// Two-chain commit: processing b commits its grandparent when the
    /// parent-grandparent link is direct. The second link may span gaps.
    void schedule_commit_check(const BlockHash& b_star, ViewNumber trigger, EngineResult& r) {
        pending_commit_checks_.emplace(b_star, trigger);
        run_commit_checks(r);
    }

    void run_commit_checks(EngineResult& r) {
        for (auto it = pending_commit_checks_.begin(); it != pending_commit_checks_.end();) {
            const Block* b = tree_.find(it->first);
            if (b == nullptr) {
                ++it;  // still quarantined
                continue;
            }
            const Block* parent = tree_.find(b->parent);
            if (parent == nullptr) {
                ++it;
                continue;
            }
            if (parent->view != kGenesisView) {
                const Block* gp = tree_.find(parent->parent);
                if (gp == nullptr) {
                    ++it;
                    continue;
                }
                if (parent->view == gp->view + 1) {
                    apply_commit(gp->hash, it->second, r);
                }
            }
            it = pending_commit_checks_.erase(it);
        }
    }

    void handle_fetch_response(const FetchResponse& resp, ReplicaId from, EngineResult& r) {
        if (!check_block_shell(resp.block)) return;
        insert_with_fetch(resp.block, from, r);
        run_commit_checks(r);
    }

    QuorumCert high_qc_ = genesis_qc();
    ViewNumber last_voted_view_ = 0;
    std::map<ViewNumber, std::map<BlockHash, std::map<ReplicaId, VoteMsg>>> pending_votes_;
    std::map<ViewNumber, std::map<ReplicaId, NewViewMsg>> pending_newviews_;
    std::set<ViewNumber> proposed_views_;
    std::set<BlockHash> seen_blocks_;
    std::map<BlockHash, ViewNumber> pending_commit_checks_;
};

}  // namespace

std::unique_ptr<ReplicaEngine> make_fhs_pipelined_engine(EngineConfig cfg) {
    return std::make_unique<FhsPipelinedEngine>(std::move(cfg));
}

}  // namespace bftlab
