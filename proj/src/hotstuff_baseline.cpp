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

/// Pipelined three-chain HotStuff, the comparison target. Permissive voting
/// rule (extends the lock, or fresher justify than the lock), three-chain
/// commit, linear view change carrying a single QC. Deliberately vulnerable
/// to forking by stale certificates.
class HotStuffEngine final : public EngineBase {
  public:
    explicit HotStuffEngine(EngineConfig cfg) : EngineBase(std::move(cfg)) {
        lock_block_ = genesis_hash();
    }

    EngineResult on_start() override {
        EngineResult r;
        enter_view(1, "start", r);
        if (leader(1) == cfg_.id) propose(1, high_qc_, r);
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
        } else if (const auto* qm = std::get_if<QcMsg>(&m)) {
            handle_qc_forward(*qm, r);
        } else if (const auto* fr = std::get_if<FetchRequest>(&m)) {
            serve_fetch(*fr, r);
        } else if (const auto* fresp = std::get_if<FetchResponse>(&m)) {
            handle_fetch_response(*fresp, from, r);
        }
        return r;
    }

    // Announce-then-wait timeout handling; the view moves on a quorum of
    // announcements. See the basic engine for the rationale.
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
        while (!newviews_.empty() && newviews_.begin()->first < cur_view_) {
            newviews_.erase(newviews_.begin());
        }
        // Keep one view of votes behind: the previous leader is still
        // aggregating while everyone has moved on.
        while (!votes_.empty() && votes_.begin()->first.first + 1 < cur_view_) {
            votes_.erase(votes_.begin());
        }
    }

    void propose(ViewNumber view, const QuorumCert& justify, EngineResult& r) {
        if (proposed_views_.count(view)) return;
        proposed_views_.insert(view);
        r.out.push_back(OutboundMessage{make_block(view, justify.block, justify), std::nullopt});
    }

    void adopt_qc(const QuorumCert& qc, EngineResult& r) {
        if (qc.view > high_qc_.view) high_qc_ = qc;
        // Holding the certificate for the previous view makes us a ready
        // leader; propose without waiting for timeouts.
        ViewNumber next = qc.view + 1;
        if (leader(next) == cfg_.id && cur_view_ <= next && !proposed_views_.count(next)) {
            enter_view(next, "qc", r);
            propose(next, high_qc_, r);
        }
    }

    void handle_proposal(const Block& b, ReplicaId from, EngineResult& r) {
        if (!check_block_shell(b)) return;
        if (b.view < cur_view_) return;
        if (justify_is_aggqc(b.justify)) return;  // baseline carries a single QC
        const auto& qc = std::get<QuorumCert>(b.justify);

        std::uint64_t before = scheme().aggregate_verifications();
        bool valid = qc.view < b.view && b.parent == qc.block &&
                     qc_has_quorum(qc, quorum()) && verify_qc(scheme(), qc);
        AuditNote vc;
        vc.kind = AuditNote::Kind::VerifCount;
        vc.view = b.view;
        vc.block = b.hash;
        vc.delta = static_cast<std::uint32_t>(scheme().aggregate_verifications() - before);
        vc.aggqc = false;
        r.audits.push_back(vc);
        if (!valid) return;

        InsertResult ins = insert_with_fetch(b, from, r);
        if (ins == InsertResult::QuarantinedMissingParent) {
            // The voting rule needs the ancestor path; hold until fetched.
            held_.insert(b.hash);
            if (qc.view > high_qc_.view) high_qc_ = qc;
            return;
        }
        if (ins == InsertResult::HashMismatch) return;
        process_connected_block(b.hash, r);
    }

    void process_connected_block(const BlockHash& hash, EngineResult& r) {
        const Block* b = tree_.find(hash);
        if (b == nullptr || processed_.count(hash)) return;
        processed_.insert(hash);
        const auto& qc = std::get<QuorumCert>(b->justify);

        if (qc.view > high_qc_.view) high_qc_ = qc;

        // Voting rule: the block extends the locked block, or its justify is
        // fresher than the lock.
        bool extends_lock = tree_.is_ancestor(lock_block_, hash);
        bool fresher = qc.view > lock_view_;
        if ((extends_lock || fresher) && b->view >= cur_view_ && b->view > last_voted_view_) {
            last_voted_view_ = b->view;
            r.out.push_back(
                OutboundMessage{make_vote(Phase::Generic, b->view, hash), leader(b->view)});
            // Lock the voted block's grandparent; locks never regress.
            const Block* parent = tree_.find(b->parent);
            if (parent != nullptr && parent->view != kGenesisView) {
                const Block* gp = tree_.find(parent->parent);
                if (gp != nullptr && gp->view > lock_view_) {
                    lock_view_ = gp->view;
                    lock_block_ = gp->hash;
                }
            }
            enter_view(b->view + 1, "vote", r);
        } else if (qc.view + 1 > cur_view_) {
            enter_view(qc.view + 1, "qc", r);
        }

        commit_check(*b, r);
    }

    /// Three-chain commit: the immediate ancestor triple (c3, c2, c1) under b
    /// must span consecutive views; the b -> c1 link may have gaps. Commits
    /// c3 and its uncommitted ancestors.
    void commit_check(const Block& b, EngineResult& r) {
        const Block* c1 = tree_.find(b.parent);
        if (c1 == nullptr || c1->view == kGenesisView) return;
        const Block* c2 = tree_.find(c1->parent);
        if (c2 == nullptr || c2->view == kGenesisView) return;
        const Block* c3 = tree_.find(c2->parent);
        if (c3 == nullptr || c3->view == kGenesisView) return;
        if (c1->view == c2->view + 1 && c2->view == c3->view + 1) {
            apply_commit(c3->hash, b.view, r);
        }
    }

    void handle_vote(const VoteMsg& v, EngineResult& r) {
        if (v.type != Phase::Generic || !check_vote(v)) return;
        if (v.view + 1 < cur_view_) return;  // voters trail the leader by one view
        if (v.view > cur_view_ + cfg_.buffer_horizon) return;
        votes_[{v.view, v.block}].emplace(v.voter, v);
        auto& set = votes_[{v.view, v.block}];
        if (set.size() >= quorum() && leader(v.view) == cfg_.id && !forwarded_qc_.count(v.view)) {
            std::vector<VoteMsg> vs;
            vs.reserve(set.size());
            for (const auto& [voter, vote] : set) vs.push_back(vote);
            auto qc = build_qc(scheme(), vs);
            if (!qc) return;
            forwarded_qc_.insert(v.view);
            if (qc->view > high_qc_.view) high_qc_ = *qc;
            // Linear view change: hand the certificate to the next leader only.
            r.out.push_back(OutboundMessage{QcMsg{*qc, cfg_.id}, leader(v.view + 1)});
        }
    }

    void handle_qc_forward(const QcMsg& qm, EngineResult& r) {
        const QuorumCert& qc = qm.qc;
        if (qc.type != Phase::Generic) return;
        if (!qc_has_quorum(qc, quorum()) || !verify_qc(scheme(), qc)) return;
        adopt_qc(qc, r);
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
        newviews_[nv.view].emplace(nv.sender, nv);
        auto& set = newviews_[nv.view];
        if (set.size() < quorum()) return;
        if (nv.view > cur_view_) {
            enter_view(nv.view, "timeout", r);  // quorum of announcements
        }
        if (leader(nv.view) != cfg_.id || proposed_views_.count(nv.view)) return;
        // Propose with the freshest certificate among our own and the
        // NEWVIEW-carried ones (verify before trusting a carried one).
        QuorumCert best = high_qc_;
        for (const auto& [sender, msg] : set) {
            if (msg.prepare_qc.view > best.view && qc_has_quorum(msg.prepare_qc, quorum()) &&
                verify_qc(scheme(), msg.prepare_qc)) {
                best = msg.prepare_qc;
            }
        }
        if (best.view > high_qc_.view) high_qc_ = best;
        propose(nv.view, best, r);
    }

    void handle_fetch_response(const FetchResponse& resp, ReplicaId from, EngineResult& r) {
        if (!check_block_shell(resp.block)) return;
        const auto* qc = std::get_if<QuorumCert>(&resp.block.justify);
        if (qc == nullptr || !qc_has_quorum(*qc, quorum()) || !verify_qc(scheme(), *qc)) return;
        insert_with_fetch(resp.block, from, r);
        for (const BlockHash& h : tree_.last_connected()) {
            if (held_.count(h)) {
                held_.erase(h);
                process_connected_block(h, r);
            }
        }
    }

    QuorumCert high_qc_ = genesis_qc();
    ViewNumber last_voted_view_ = 0;
    ViewNumber lock_view_ = 0;
    BlockHash lock_block_{};
    std::map<ViewNumber, std::map<ReplicaId, NewViewMsg>> newviews_;
    std::map<std::pair<ViewNumber, BlockHash>, std::map<ReplicaId, VoteMsg>> votes_;
    std::set<ViewNumber> proposed_views_;
    std::set<ViewNumber> forwarded_qc_;
    std::set<BlockHash> processed_;
    std::set<BlockHash> held_;
};

}  // namespace

std::unique_ptr<ReplicaEngine> make_hotstuff_engine(EngineConfig cfg) {
    return std::make_unique<HotStuffEngine>(std::move(cfg));
}

}  // namespace bftlab
