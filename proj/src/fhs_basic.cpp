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

/// Three-phase engine: every view runs PREPARE / PRECOMMIT / COMMIT, every
/// proposal carries an AggregateQc built from the NEWVIEWs that opened the
/// view. Votes go to the current primary.
class FhsBasicEngine final : public EngineBase {
  public:
    explicit FhsBasicEngine(EngineConfig cfg) : EngineBase(std::move(cfg)) {}

    EngineResult on_start() override {
        EngineResult r;
        enter_view(1, "start", r, /*send_newview=*/true);
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
            handle_qc(*qm, from, r);
        } else if (const auto* fr = std::get_if<FetchRequest>(&m)) {
            serve_fetch(*fr, r);
        } else if (const auto* fresp = std::get_if<FetchResponse>(&m)) {
            handle_fetch_response(*fresp, from, r);
        }
        return r;
    }

    // A timer fire never advances the view by itself: it announces the wish
    // to move on. The view changes when 2f+1 such announcements assemble,
    // which keeps honest view entries synchronized to within the network
    // delay whatever the local timers drift to.
    EngineResult on_timer(ViewNumber view) override {
        EngineResult r;
        if (!timer_fire_is_live(view)) return r;
        backoff_.on_failure();
        r.out.push_back(OutboundMessage{make_newview(view + 1, prepare_qc_), std::nullopt});
        arm_timer(r);  // re-announce with doubled patience if still stuck
        return r;
    }

  private:
    struct Accepted {
        BlockHash block{};
        BlockHash high_block{};  // extracted highQC.block of that proposal
    };

    void enter_view(ViewNumber v, const char* reason, EngineResult& r, bool send_newview) {
        if (v <= cur_view_) return;
        cur_view_ = v;
        if (reason[0] != 't' && reason[0] != 'c') backoff_.on_success();
        arm_timer(r);
        AuditNote a;
        a.kind = AuditNote::Kind::ViewEnter;
        a.view = v;
        a.code = reason;
        r.audits.push_back(a);
        if (send_newview) {
            // Broadcast: the leader aggregates these, everyone else uses
            // them as view-synchronization evidence.
            r.out.push_back(OutboundMessage{make_newview(v, prepare_qc_), std::nullopt});
        }
        while (!newviews_.empty() && newviews_.begin()->first < cur_view_) {
            newviews_.erase(newviews_.begin());
        }
        while (!votes_.empty() && std::get<0>(votes_.begin()->first) < cur_view_) {
            votes_.erase(votes_.begin());
        }
    }

    void handle_newview(const NewViewMsg& nv, EngineResult& r) {
        if (!check_newview(nv)) return;
        note_view_claim(nv.sender, nv.view);
        ViewNumber target = catchup_target();
        if (target > cur_view_) {
            // f+1 distinct replicas are provably past us; join them.
            enter_view(target, "catchup", r, /*send_newview=*/true);
        }
        if (nv.view < cur_view_) return;  // stale
        if (nv.view > cur_view_ + cfg_.buffer_horizon) return;
        newviews_[nv.view].emplace(nv.sender, nv);  // duplicates counted once
        if (nv.view > cur_view_ && newviews_[nv.view].size() >= quorum()) {
            // A quorum wants this view: that is the timeout certificate.
            enter_view(nv.view, "timeout", r, /*send_newview=*/false);
        }
        try_propose(r);
    }

    void try_propose(EngineResult& r) {
        ViewNumber v = cur_view_;
        if (leader(v) != cfg_.id || proposed_views_.count(v)) return;
        auto it = newviews_.find(v);
        if (it == newviews_.end() || it->second.size() < quorum()) return;
        std::vector<NewViewMsg> nvs;
        nvs.reserve(it->second.size());
        for (const auto& [sender, nv] : it->second) nvs.push_back(nv);
        std::uint64_t before = scheme().aggregate_verifications();
        AggQcBuildResult built = build_agg_qc(scheme(), nvs, v, quorum());
        AuditNote a;
        a.kind = AuditNote::Kind::VerifCount;
        a.delta = static_cast<std::uint32_t>(scheme().aggregate_verifications() - before);
        a.aggqc = true;
        a.build_path = true;
        r.audits.push_back(a);
        if (!built.aggqc) return;
        ExtractResult ex = extract_high_qc(*built.aggqc);
        proposed_views_.insert(v);
        r.out.push_back(
            OutboundMessage{make_block(v, ex.high.block, std::move(*built.aggqc)), std::nullopt});
    }

    void handle_proposal(const Block& b, ReplicaId from, EngineResult& r) {
        if (!check_block_shell(b)) return;
        if (b.view < cur_view_) return;
        if (!justify_is_aggqc(b.justify)) return;  // every proposal carries the proof
        const auto& agg = std::get<AggregateQc>(b.justify);

        std::uint64_t before = scheme().aggregate_verifications();
        bool valid = agg.view == b.view && verify_agg_qc(scheme(), agg, quorum());
        ExtractResult ex = extract_high_qc(agg);
        if (ex.equal_view_divergence) {
            // Two certificates for one view that differ: evidence, not noise.
            note_violation(r, "aggqc_equal_view_divergence",
                           "equal-view members differ in AggQC for view " +
                               std::to_string(b.view));
        }
        QuorumCert high = ex.high;
        valid = valid && qc_has_quorum(high, quorum());
        if (valid) {
            AuditNote ex_note;
            ex_note.kind = AuditNote::Kind::AggQcExtract;
            ex_note.view = b.view;
            ex_note.aux_view = high.view;
            ex_note.block = high.block;
            r.audits.push_back(ex_note);
        }
        AuditNote vc;
        vc.kind = AuditNote::Kind::VerifCount;
        vc.view = b.view;
        vc.block = b.hash;
        vc.delta = static_cast<std::uint32_t>(scheme().aggregate_verifications() - before);
        vc.aggqc = true;
        r.audits.push_back(vc);
        if (!valid) return;  // reject; the view will expire via timeout

        // A valid AggQC proves a quorum entered b.view; catch up if behind.
        if (b.view > cur_view_) enter_view(b.view, "aggqc", r, /*send_newview=*/false);
        if (b.view != cur_view_) return;

        if (high.view > prepare_qc_.view) prepare_qc_ = high;

        // BasicSafeProposal: the block must extend the extracted high block.
        if (b.parent != high.block) return;

        insert_with_fetch(b, from, r);
        accepted_[b.view] = Accepted{b.hash, high.block};
        arm_timer(r);  // the view is alive; give the remaining phases room
        if (voted_prepare_view_ < b.view) {
            voted_prepare_view_ = b.view;
            r.out.push_back(
                OutboundMessage{make_vote(Phase::Prepare, b.view, b.hash), leader(b.view)});
        }
        flush_deferred_qcs(r);
    }

    void handle_vote(const VoteMsg& v, EngineResult& r) {
        if (v.type != Phase::Prepare && v.type != Phase::Precommit) return;
        if (!check_vote(v)) return;
        if (v.view < cur_view_) return;
        if (v.view > cur_view_ + cfg_.buffer_horizon) return;
        votes_[{v.view, v.type, v.block}].emplace(v.voter, v);
        maybe_emit_phase_qc(v.view, v.type, v.block, r);
    }

    void maybe_emit_phase_qc(ViewNumber view, Phase phase, const BlockHash& block,
                             EngineResult& r) {
        if (leader(view) != cfg_.id || view != cur_view_) return;
        auto it = votes_.find({view, phase, block});
        if (it == votes_.end() || it->second.size() < quorum()) return;
        auto flag_key = std::make_pair(view, phase);
        if (emitted_qcs_.count(flag_key)) return;
        std::vector<VoteMsg> vs;
        vs.reserve(it->second.size());
        for (const auto& [voter, vote] : it->second) vs.push_back(vote);
        auto qc = build_qc(scheme(), vs);
        if (!qc) return;
        emitted_qcs_.insert(flag_key);
        r.out.push_back(OutboundMessage{QcMsg{*qc, cfg_.id}, std::nullopt});
    }

    void handle_qc(const QcMsg& qm, ReplicaId from, EngineResult& r) {
        const QuorumCert& qc = qm.qc;
        if (qc.type != Phase::Prepare && qc.type != Phase::Precommit) return;
        if (qc.view < cur_view_) return;
        if (qc.view > cur_view_ + cfg_.buffer_horizon) return;
        if (!qc_has_quorum(qc, quorum()) || !verify_qc(scheme(), qc)) return;

        // A valid phase QC proves a quorum is working in qc.view.
        if (qc.view > cur_view_) enter_view(qc.view, "qc", r, /*send_newview=*/false);

        if (!tree_.contains(qc.block)) {
            // Proposal not seen yet; fetch it and retry when it connects.
            deferred_qcs_[{qc.block, qc.type}] = qm;
            FetchRequest req{qc.block, cfg_.id};
            r.out.push_back(OutboundMessage{req, from == cfg_.id ? leader(qc.view) : from});
            return;
        }
        process_qc(qc, r);
    }

    void process_qc(const QuorumCert& qc, EngineResult& r) {
        if (qc.view != cur_view_) return;
        if (qc.type == Phase::Prepare) {
            arm_timer(r);  // phase progress
            if (qc.view > prepare_qc_.view) prepare_qc_ = qc;
            auto acc = accepted_.find(qc.view);
            // Commit the block the proposal's highQC pointed to: a quorum
            // already voted for it.
            if (acc != accepted_.end() && acc->second.block == qc.block) {
                apply_commit(acc->second.high_block, qc.view, r);
            }
            if (voted_precommit_view_ < qc.view) {
                voted_precommit_view_ = qc.view;
                r.out.push_back(OutboundMessage{make_vote(Phase::Precommit, qc.view, qc.block),
                                                leader(qc.view)});
            }
        } else {
            // PrecommitQC: execute through the block and move on.
            apply_commit(qc.block, qc.view, r);
            enter_view(qc.view + 1, "decide", r, /*send_newview=*/true);
            try_propose(r);
        }
    }

    void flush_deferred_qcs(EngineResult& r) {
        for (auto it = deferred_qcs_.begin(); it != deferred_qcs_.end();) {
            if (tree_.contains(it->first.first)) {
                QcMsg qm = it->second;
                it = deferred_qcs_.erase(it);
                process_qc(qm.qc, r);
            } else {
                ++it;
            }
        }
    }

    void handle_fetch_response(const FetchResponse& resp, ReplicaId from, EngineResult& r) {
        if (!check_block_shell(resp.block)) return;
        insert_with_fetch(resp.block, from, r);
        flush_deferred_qcs(r);
    }

    QuorumCert prepare_qc_ = genesis_qc();
    ViewNumber voted_prepare_view_ = 0;
    ViewNumber voted_precommit_view_ = 0;
    std::map<ViewNumber, std::map<ReplicaId, NewViewMsg>> newviews_;
    std::map<std::tuple<ViewNumber, Phase, BlockHash>, std::map<ReplicaId, VoteMsg>> votes_;
    std::set<std::pair<ViewNumber, Phase>> emitted_qcs_;
    std::set<ViewNumber> proposed_views_;
    std::map<ViewNumber, Accepted> accepted_;
    std::map<std::pair<BlockHash, Phase>, QcMsg> deferred_qcs_;
};

}  // namespace

std::unique_ptr<ReplicaEngine> make_fhs_basic_engine(EngineConfig cfg) {
    return std::make_unique<FhsBasicEngine>(std::move(cfg));
}

}  // namespace bftlab
