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

#include "bftlab/engine.hpp"

#include <algorithm>

namespace bftlab {

void EngineResult::append(EngineResult&& o) {
    for (auto& m : o.out) out.push_back(std::move(m));
    for (auto& c : o.commits) commits.push_back(std::move(c));
    for (auto& t : o.timers) timers.push_back(std::move(t));
    for (auto& a : o.audits) audits.push_back(std::move(a));
}

EngineBase::EngineBase(EngineConfig cfg)
    : cfg_(std::move(cfg)),
      leaders_(cfg_.blacklist, cfg_.n, cfg_.f, cfg_.schedule),
      backoff_(cfg_.base_timeout, cfg_.max_doublings) {}

Block build_signed_block(const SignatureScheme& scheme, ReplicaId proposer, ViewNumber view,
                         const BlockHash& parent, Justify justify, const Payload& payload) {
    Block b;
    b.view = view;
    b.proposer = proposer;
    b.payload = payload;
    b.parent = parent;
    b.justify = std::move(justify);
    b.hash = compute_block_hash(b);
    b.proposer_sig = scheme.sign(proposer, proposal_signing_bytes(b.hash));
    return b;
}

Block EngineBase::make_block(ViewNumber view, const BlockHash& parent, Justify justify,
                             std::uint64_t payload_salt_extra) const {
    Payload payload = make_payload(view, cfg_.id, cfg_.payload_txs, cfg_.payload_bytes,
                                   cfg_.payload_salt + payload_salt_extra);
    return build_signed_block(scheme(), cfg_.id, view, parent, std::move(justify), payload);
}

bool EngineBase::check_block_shell(const Block& b) const {
    if (b.view == kGenesisView) return false;
    if (compute_block_hash(b) != b.hash) return false;
    if (b.proposer != leader(b.view)) return false;
    return scheme().verify(b.proposer, proposal_signing_bytes(b.hash), b.proposer_sig);
}

bool EngineBase::check_vote(const VoteMsg& v) const {
    if (v.voter >= cfg_.n) return false;
    return scheme().verify(v.voter, vote_signing_bytes(v.type, v.view, v.block, v.voter), v.sig);
}

bool EngineBase::check_newview(const NewViewMsg& nv) const {
    if (nv.sender >= cfg_.n) return false;
    if (nv.prepare_qc.view >= nv.view) return false;
    return scheme().verify(nv.sender,
                           newview_signing_bytes(nv.view, nv.prepare_qc.block, nv.sender),
                           nv.sig);
}

VoteMsg EngineBase::make_vote(Phase type, ViewNumber view, const BlockHash& block) const {
    VoteMsg v;
    v.type = type;
    v.view = view;
    v.block = block;
    v.voter = cfg_.id;
    v.sig = scheme().sign(cfg_.id, vote_signing_bytes(type, view, block, cfg_.id));
    return v;
}

NewViewMsg EngineBase::make_newview(ViewNumber view, const QuorumCert& qc) const {
    NewViewMsg nv;
    nv.view = view;
    nv.prepare_qc = qc;
    nv.sender = cfg_.id;
    nv.sig = scheme().sign(cfg_.id, newview_signing_bytes(view, qc.block, cfg_.id));
    return nv;
}

void EngineBase::apply_commit(const BlockHash& target, ViewNumber trigger_view,
                              EngineResult& r) {
    CommitOutcome outcome = tree_.commit(target);
    if (outcome.conflict) {
        note_violation(r, "commit_conflict",
                       "commit target conflicts with committed chain at replica " +
                           std::to_string(cfg_.id));
        return;
    }
    for (const BlockHash& h : outcome.newly_committed) {
        const Block* b = tree_.find(h);
        const Block* parent = tree_.find(b->parent);
        CommitNote note;
        note.block = h;
        note.block_view = b->view;
        note.height = tree_.height(h);
        note.trigger_view = trigger_view;
        note.proposer = b->proposer;
        r.commits.push_back(note);
        leaders_.on_committed(parent ? parent->view : kGenesisView, b->view);
    }
}

InsertResult EngineBase::insert_with_fetch(const Block& b, ReplicaId from, EngineResult& r) {
    InsertResult res = tree_.insert(b);
    if (res == InsertResult::HashMismatch) {
        note_violation(r, "hash_breach", "two blocks share hash " + b.hash.short_hex());
        return res;
    }
    if (res == InsertResult::QuarantinedMissingParent) {
        for (const BlockHash& want : tree_.take_fetch_wants()) {
            FetchRequest req{want, cfg_.id};
            ReplicaId target = (from == cfg_.id) ? b.proposer : from;
            r.out.push_back(OutboundMessage{req, target});
        }
    }
    return res;
}

void EngineBase::serve_fetch(const FetchRequest& req, EngineResult& r) {
    const Block* b = tree_.find(req.want);
    if (b != nullptr && req.requester < cfg_.n && req.requester != cfg_.id) {
        r.out.push_back(OutboundMessage{FetchResponse{*b}, req.requester});
    }
}

void EngineBase::note_violation(EngineResult& r, const std::string& code,
                                const std::string& detail) {
    AuditNote a;
    a.kind = AuditNote::Kind::Violation;
    a.code = code;
    a.detail = detail;
    r.audits.push_back(a);
}

void EngineBase::arm_timer(EngineResult& r) {
    ++armed_timers_[cur_view_];
    r.timers.push_back(TimerRequest{cur_view_, backoff_.current()});
    while (!armed_timers_.empty() && armed_timers_.begin()->first < cur_view_) {
        armed_timers_.erase(armed_timers_.begin());
    }
}

bool EngineBase::timer_fire_is_live(ViewNumber view) {
    if (view != cur_view_) return false;
    auto it = armed_timers_.find(view);
    if (it == armed_timers_.end()) return false;
    if (it->second > 1) {
        --it->second;  // an older fire, absorbed by a re-arm
        return false;
    }
    armed_timers_.erase(it);
    return true;
}

void EngineBase::note_view_claim(ReplicaId sender, ViewNumber view) {
    ViewNumber& cur = view_claims_[sender];
    cur = std::max(cur, view);
}

ViewNumber EngineBase::catchup_target() const {
    if (view_claims_.size() <= cfg_.f) return 0;
    std::vector<ViewNumber> views;
    views.reserve(view_claims_.size());
    for (const auto& [sender, view] : view_claims_) views.push_back(view);
    std::sort(views.begin(), views.end(), std::greater<>());
    // At least one of any f+1 claimants is honest.
    return views[cfg_.f];
}

}  // namespace bftlab
