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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bftlab/block_tree.hpp"
#include "bftlab/crypto.hpp"
#include "bftlab/pacemaker.hpp"
#include "bftlab/types.hpp"

namespace bftlab {

struct OutboundMessage {
    Message msg;
    std::optional<ReplicaId> to;  // nullopt = broadcast (includes self)
};

struct CommitNote {
    BlockHash block{};
    ViewNumber block_view = 0;
    std::uint64_t height = 0;
    ViewNumber trigger_view = 0;  // view of the artifact whose processing committed it
    ReplicaId proposer = 0;
};

struct TimerRequest {
    ViewNumber view = 0;
    SimTime delay = 0;
};

struct AuditNote {
    enum class Kind { ViewEnter, AggQcExtract, VerifCount, Violation };
    Kind kind = Kind::ViewEnter;
    ViewNumber view = 0;       // ViewEnter: view entered; AggQcExtract: proposal view
    ViewNumber aux_view = 0;   // AggQcExtract: extracted member view
    BlockHash block{};         // AggQcExtract: extracted block; VerifCount: block processed
    std::uint32_t delta = 0;   // VerifCount: counted aggregate verifications
    bool aggqc = false;        // VerifCount: justify kind
    bool build_path = false;   // VerifCount: leader-side build check, not receive path
    std::string code;          // ViewEnter reason | Violation code
    std::string detail;
};

struct EngineResult {
    std::vector<OutboundMessage> out;
    std::vector<CommitNote> commits;
    std::vector<TimerRequest> timers;
    std::vector<AuditNote> audits;

    void append(EngineResult&& o);
    bool empty() const {
        return out.empty() && commits.empty() && timers.empty() && audits.empty();
    }
};

struct EngineConfig {
    ReplicaId id = 0;
    std::uint32_t n = 4;
    std::uint32_t f = 1;
    SchemePtr scheme;
    ScheduleConfig schedule;
    BlacklistConfig blacklist;
    SimTime base_timeout = 80;
    std::uint32_t max_doublings = 20;
    std::uint32_t payload_txs = 100;
    std::uint64_t payload_bytes = 1u << 20;
    std::uint64_t payload_salt = 0;
    ViewNumber buffer_horizon = 64;
};

/// Pure event-driven replica: one input event in, outbound messages, commit
/// notifications and timer requests out. No clocks, no I/O, no threads.
class ReplicaEngine {
  public:
    virtual ~ReplicaEngine() = default;

    virtual EngineResult on_start() = 0;
    virtual EngineResult on_message(const Message& m, ReplicaId from) = 0;
    virtual EngineResult on_timer(ViewNumber view) = 0;

    virtual ViewNumber current_view() const = 0;
    virtual ReplicaId id() const = 0;
    virtual const BlockTree& block_tree() const = 0;
};

/// Shared plumbing: tree, leader schedule, backoff, block construction,
/// commits with ancestor closure, fetch handling.
class EngineBase : public ReplicaEngine {
  public:
    explicit EngineBase(EngineConfig cfg);

    ViewNumber current_view() const override { return cur_view_; }
    ReplicaId id() const override { return cfg_.id; }
    const BlockTree& block_tree() const override { return tree_; }

  protected:
    std::uint32_t quorum() const { return 2 * cfg_.f + 1; }
    ReplicaId leader(ViewNumber v) const { return leaders_.leader(v); }
    const SignatureScheme& scheme() const { return *cfg_.scheme; }

    Block make_block(ViewNumber view, const BlockHash& parent, Justify justify,
                     std::uint64_t payload_salt_extra = 0) const;

    bool check_block_shell(const Block& b) const;  // hash + proposer sig + leader match
    bool check_vote(const VoteMsg& v) const;
    bool check_newview(const NewViewMsg& nv) const;

    VoteMsg make_vote(Phase type, ViewNumber view, const BlockHash& block) const;
    NewViewMsg make_newview(ViewNumber view, const QuorumCert& qc) const;

    /// Commit target and its uncommitted ancestors; emits notes, feeds the
    /// blacklist tracker, reports conflicts as violations.
    void apply_commit(const BlockHash& target, ViewNumber trigger_view, EngineResult& r);

    /// Insert, and on quarantine ask `from` for the missing parent.
    InsertResult insert_with_fetch(const Block& b, ReplicaId from, EngineResult& r);

    void serve_fetch(const FetchRequest& req, EngineResult& r);

    void note_violation(EngineResult& r, const std::string& code, const std::string& detail);

    /// Arms (or re-arms) the timer for the current view. Re-arming absorbs
    /// the previously scheduled fire: only the newest deadline acts.
    void arm_timer(EngineResult& r);

    /// True iff this fire is the live timer for the current view.
    bool timer_fire_is_live(ViewNumber view);

    /// View-synchronization evidence: the highest view claimed per sender
    /// through valid NEWVIEWs. f+1 distinct senders ahead of us justify
    /// jumping to the (f+1)-th highest claimed view.
    void note_view_claim(ReplicaId sender, ViewNumber view);
    ViewNumber catchup_target() const;

    EngineConfig cfg_;
    BlockTree tree_;
    BlacklistTracker leaders_;
    BackoffTimer backoff_;
    ViewNumber cur_view_ = 0;  // on_start enters view 1
    std::map<ViewNumber, std::uint32_t> armed_timers_;
    std::map<ReplicaId, ViewNumber> view_claims_;
};

/// Assemble and sign a block. Engines and adversary strategies share this.
Block build_signed_block(const SignatureScheme& scheme, ReplicaId proposer, ViewNumber view,
                         const BlockHash& parent, Justify justify, const Payload& payload);

std::unique_ptr<ReplicaEngine> make_fhs_basic_engine(EngineConfig cfg);
std::unique_ptr<ReplicaEngine> make_fhs_pipelined_engine(EngineConfig cfg);
std::unique_ptr<ReplicaEngine> make_hotstuff_engine(EngineConfig cfg);

}  // namespace bftlab
