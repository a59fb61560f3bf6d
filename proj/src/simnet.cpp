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

#include "bftlab/simnet.hpp"

#include <algorithm>
#include <memory>
#include <queue>
#include <set>

#include "bftlab/crypto.hpp"
#include "bftlab/engine.hpp"
#include "bftlab/scenario.hpp"

namespace bftlab {

const char* protocol_name(ProtocolKind p) {
    switch (p) {
        case ProtocolKind::FhsBasic: return "fhs_basic";
        case ProtocolKind::FhsPipelined: return "fhs_pipelined";
        case ProtocolKind::HotStuff: return "hotstuff";
    }
    return "?";
}

const char* strategy_name(StrategyKind s) {
    switch (s) {
        case StrategyKind::None: return "none";
        case StrategyKind::SilentPrimary: return "silent_primary";
        case StrategyKind::TimeoutAbuser: return "timeout_abuser";
        case StrategyKind::Forking: return "forking";
        case StrategyKind::WorstCaseRoundRobinForker: return "worstcase_rr_forking";
        case StrategyKind::EquivocatorTwins: return "twins";
        case StrategyKind::SelectiveQcWithholder: return "selective_withhold";
    }
    return "?";
}

SimConfig canonicalize_config(SimConfig cfg) {
    if (cfg.adversary.kind == StrategyKind::None) {
        cfg.adversary.replicas.clear();
        cfg.adversary.withhold_targets.clear();
    }
    if (cfg.adversary.kind == StrategyKind::WorstCaseRoundRobinForker &&
        cfg.adversary.replicas.empty()) {
        // Round-robin worst case: a forker every third slot, one rotation.
        for (std::uint32_t k = 1; k <= cfg.f; ++k) {
            cfg.adversary.replicas.push_back(3 * k);
        }
    }
    std::sort(cfg.adversary.replicas.begin(), cfg.adversary.replicas.end());
    cfg.adversary.replicas.erase(
        std::unique(cfg.adversary.replicas.begin(), cfg.adversary.replicas.end()),
        cfg.adversary.replicas.end());
    if (cfg.adversary.kind == StrategyKind::SelectiveQcWithholder &&
        cfg.adversary.withhold_targets.empty()) {
        for (ReplicaId id = 0; id < cfg.n; ++id) {
            if (!std::binary_search(cfg.adversary.replicas.begin(),
                                    cfg.adversary.replicas.end(), id)) {
                cfg.adversary.withhold_targets.push_back(id);
                break;
            }
        }
    }
    return cfg;
}

std::vector<std::string> validate_config(const SimConfig& cfg) {
    std::vector<std::string> errors;
    if (cfg.n != 3 * cfg.f + 1) errors.push_back("n must equal 3f+1");
    if (cfg.n == 0) errors.push_back("n must be positive");
    if (cfg.delta <= 0) errors.push_back("delta must be positive");
    if (cfg.gst < 0) errors.push_back("gst must be non-negative");
    if (cfg.max_views == 0) errors.push_back("max_views must be positive");
    if (cfg.max_time <= 0) errors.push_back("max_time must be positive");
    if (cfg.pacemaker.base_timeout <= 0) errors.push_back("base_timeout must be positive");
    if (cfg.pre_gst.max_delay <= 0) errors.push_back("pre_gst.max_delay must be positive");
    if (cfg.pre_gst.drop_per_mille > 1000) errors.push_back("drop_per_mille over 1000");
    if (cfg.adversary.replicas.size() > cfg.f) {
        errors.push_back("byzantine set larger than f");
    }
    for (ReplicaId id : cfg.adversary.replicas) {
        if (id >= cfg.n) errors.push_back("byzantine id out of range");
    }
    for (ReplicaId id : cfg.adversary.withhold_targets) {
        if (id >= cfg.n) errors.push_back("withhold target out of range");
        if (std::binary_search(cfg.adversary.replicas.begin(), cfg.adversary.replicas.end(),
                               id)) {
            errors.push_back("withhold target cannot be byzantine");
        }
    }
    if (cfg.adversary.kind != StrategyKind::None && cfg.adversary.replicas.empty()) {
        errors.push_back("adversary strategy set but byzantine set empty");
    }
    for (const PartitionSpec& p : cfg.partitions) {
        if (p.from >= p.until) errors.push_back("partition interval empty");
        if (p.until > cfg.gst) errors.push_back("partitions must heal before gst");
        for (ReplicaId id : p.side_a) {
            if (id >= cfg.n) errors.push_back("partition id out of range");
        }
    }
    if (cfg.schedule.kind == ScheduleKind::Scripted) {
        if (cfg.schedule.script.empty()) errors.push_back("scripted schedule empty");
        for (ReplicaId id : cfg.schedule.script) {
            if (id >= cfg.n) errors.push_back("scripted leader out of range");
        }
    }
    std::sort(errors.begin(), errors.end());
    errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
    return errors;
}

bool is_byzantine(const SimConfig& cfg, ReplicaId id) {
    return std::binary_search(cfg.adversary.replicas.begin(), cfg.adversary.replicas.end(), id);
}

std::uint64_t message_wire_bytes(const Message& m, const ByteModelConfig& bytes,
                                 std::uint32_t n, std::uint64_t /*payload_block_bytes*/) {
    std::uint64_t base = bytes.header_bytes;
    if (const auto* b = std::get_if<Block>(&m)) {
        std::uint64_t justify = justify_is_aggqc(b->justify)
                                    ? bytes.aggqc_bytes(n, std::get<AggregateQc>(b->justify)
                                                               .members.size())
                                    : bytes.qc_bytes(n);
        return base + b->payload.nominal_bytes + justify + bytes.sig_bytes;
    }
    if (std::holds_alternative<VoteMsg>(m)) {
        return base + bytes.view_bytes + bytes.hash_bytes + bytes.sig_bytes;
    }
    if (std::holds_alternative<NewViewMsg>(m)) {
        return base + bytes.view_bytes + bytes.qc_bytes(n) + bytes.sig_bytes;
    }
    if (std::holds_alternative<QcMsg>(m)) {
        return base + bytes.qc_bytes(n);
    }
    if (std::holds_alternative<FetchRequest>(m)) {
        return base + bytes.hash_bytes;
    }
    const auto& fr = std::get<FetchResponse>(m);
    return message_wire_bytes(fr.block, bytes, n, 0);
}

namespace {

std::unique_ptr<ReplicaEngine> make_engine(ProtocolKind protocol, EngineConfig ec) {
    switch (protocol) {
        case ProtocolKind::FhsBasic: return make_fhs_basic_engine(std::move(ec));
        case ProtocolKind::FhsPipelined: return make_fhs_pipelined_engine(std::move(ec));
        case ProtocolKind::HotStuff: return make_hotstuff_engine(std::move(ec));
    }
    return nullptr;
}

/// The QC certifying a block's parent, whatever the justify flavor.
QuorumCert justify_as_qc(const Justify& j) {
    if (const auto* qc = std::get_if<QuorumCert>(&j)) return *qc;
    return extract_high_qc(std::get<AggregateQc>(j)).high;
}

class SimNode {
  public:
    virtual ~SimNode() = default;
    virtual EngineResult start() = 0;
    virtual EngineResult deliver(const Message& m, ReplicaId from) = 0;
    virtual EngineResult timer(ViewNumber view) = 0;
    virtual ViewNumber view() const = 0;
};

class HonestNode final : public SimNode {
  public:
    explicit HonestNode(std::unique_ptr<ReplicaEngine> e) : engine_(std::move(e)) {}
    EngineResult start() override { return engine_->on_start(); }
    EngineResult deliver(const Message& m, ReplicaId from) override {
        return engine_->on_message(m, from);
    }
    EngineResult timer(ViewNumber v) override { return engine_->on_timer(v); }
    ViewNumber view() const override { return engine_->current_view(); }

  private:
    std::unique_ptr<ReplicaEngine> engine_;
};

/// Strategy controllers run a real engine and doctor its outbound traffic.
/// They can only sign with their own identity; the scheme enforces that
/// honest-attributed messages cannot be forged.
class StrategyNodeBase : public SimNode {
  public:
    StrategyNodeBase(const SimConfig& cfg, EngineConfig ec)
        : sim_cfg_(cfg),
          ec_(ec),
          engine_(make_engine(cfg.protocol, ec)),
          empty_blacklist_(0) {}

    EngineResult start() override { return transform(engine_->on_start()); }
    EngineResult deliver(const Message& m, ReplicaId from) override {
        observe_inbound(m);
        return transform(engine_->on_message(m, from));
    }
    EngineResult timer(ViewNumber v) override { return transform(engine_->on_timer(v)); }
    ViewNumber view() const override { return engine_->current_view(); }

  protected:
    virtual EngineResult transform(EngineResult r) = 0;
    virtual void observe_inbound(const Message&) {}

    ReplicaId me() const { return ec_.id; }
    ReplicaId base_leader(ViewNumber v) const {
        return leader_for_view(v, sim_cfg_.n, sim_cfg_.schedule, empty_blacklist_);
    }
    bool own_proposal(const OutboundMessage& om) const {
        const auto* b = std::get_if<Block>(&om.msg);
        return b != nullptr && b->proposer == me();
    }

    const SimConfig& sim_cfg_;
    EngineConfig ec_;
    std::unique_ptr<ReplicaEngine> engine_;
    Blacklist empty_blacklist_;
};

/// Refuses to propose when leading; honest otherwise. The view it owns
/// expires by timeout.
class SilentPrimaryNode final : public StrategyNodeBase {
  public:
    using StrategyNodeBase::StrategyNodeBase;

  protected:
    EngineResult transform(EngineResult r) override {
        r.out.erase(std::remove_if(r.out.begin(), r.out.end(),
                                   [&](const OutboundMessage& om) { return own_proposal(om); }),
                    r.out.end());
        return r;
    }
};

/// Times out its own views and keeps any certificate it assembled from
/// collected votes to itself: its NEWVIEWs advertise only publicly known
/// certificates, so one block from the previous view is averted.
class TimeoutAbuserNode final : public StrategyNodeBase {
  public:
    using StrategyNodeBase::StrategyNodeBase;

  protected:
    void observe_inbound(const Message& m) override {
        if (const auto* b = std::get_if<Block>(&m)) {
            track(justify_as_qc(b->justify));
        } else if (const auto* qm = std::get_if<QcMsg>(&m)) {
            track(qm->qc);
        } else if (const auto* nv = std::get_if<NewViewMsg>(&m)) {
            track(nv->prepare_qc);
        } else if (const auto* fr = std::get_if<FetchResponse>(&m)) {
            track(justify_as_qc(fr->block.justify));
        }
    }

    EngineResult transform(EngineResult r) override {
        EngineResult out;
        out.commits = std::move(r.commits);
        out.timers = std::move(r.timers);
        out.audits = std::move(r.audits);
        for (OutboundMessage& om : r.out) {
            if (own_proposal(om)) continue;
            if (std::holds_alternative<QcMsg>(om.msg)) continue;  // never share built QCs
            if (auto* nv = std::get_if<NewViewMsg>(&om.msg)) {
                if (nv->prepare_qc.view > public_high_.view && public_high_.view < nv->view) {
                    NewViewMsg doctored;
                    doctored.view = nv->view;
                    doctored.prepare_qc = public_high_;
                    doctored.sender = me();
                    doctored.sig = ec_.scheme->sign(
                        me(), newview_signing_bytes(doctored.view, doctored.prepare_qc.block,
                                                    me()));
                    om.msg = doctored;
                }
            }
            out.out.push_back(std::move(om));
        }
        return out;
    }

  private:
    void track(const QuorumCert& qc) {
        if (qc.view > public_high_.view) public_high_ = qc;
    }
    QuorumCert public_high_ = genesis_qc();
};

/// Fig.-2-shaped forking: when leading, justify the proposal with the QC of
/// the tip's grandparent, overriding the two blocks above it. In the
/// two-chain protocols the fresh certificate is revealed immediately through
/// a NEWVIEW, so the attack costs the attacker its view and nothing else.
class ForkingNode final : public StrategyNodeBase {
  public:
    using StrategyNodeBase::StrategyNodeBase;

  protected:
    EngineResult transform(EngineResult r) override {
        for (std::size_t i = 0; i < r.out.size(); ++i) {
            if (!own_proposal(r.out[i])) continue;
            const Block& honest = std::get<Block>(r.out[i].msg);
            const BlockTree& tree = engine_->block_tree();

            const Block* tip = tree.find(honest.parent);
            if (tip == nullptr || tip->view == kGenesisView) continue;
            const Block* tip_parent = tree.find(tip->parent);
            if (tip_parent == nullptr) continue;

            if (justify_is_aggqc(honest.justify)) {
                // Recovery proposal: keep the AggregateQc but point the block
                // at the grandparent, violating the extension requirement.
                Block forked = build_signed_block(*ec_.scheme, me(), honest.view,
                                                  tip->parent, honest.justify, honest.payload);
                r.out[i].msg = forked;
                continue;
            }

            QuorumCert fresh = std::get<QuorumCert>(honest.justify);
            QuorumCert stale = justify_as_qc(tip_parent->justify);
            Block forked = build_signed_block(*ec_.scheme, me(), honest.view, stale.block,
                                              stale, honest.payload);
            r.out[i].msg = forked;

            if (sim_cfg_.protocol == ProtocolKind::FhsPipelined) {
                // Honest replicas will reject the fork and time the view out;
                // hand the withheld certificate to the next leader right away
                // so the chain resumes from it.
                NewViewMsg nv;
                nv.view = honest.view + 1;
                nv.prepare_qc = fresh;
                nv.sender = me();
                nv.sig = ec_.scheme->sign(
                    me(), newview_signing_bytes(nv.view, nv.prepare_qc.block, me()));
                r.out.push_back(OutboundMessage{nv, base_leader(nv.view)});
            }
        }
        return r;
    }
};

/// Two protocol-consistent twins share one identity and key. Proposals from
/// twin 0 reach even-numbered replicas, twin 1 odd-numbered ones; everything
/// else flows to both sides.
class EquivocatorNode final : public SimNode {
  public:
    EquivocatorNode(const SimConfig& cfg, EngineConfig ec) : n_(cfg.n) {
        EngineConfig a = ec;
        EngineConfig b = ec;
        b.payload_salt += 0x100000000ULL;  // twins diverge through payloads
        twins_[0] = make_engine(cfg.protocol, std::move(a));
        twins_[1] = make_engine(cfg.protocol, std::move(b));
    }

    EngineResult start() override {
        EngineResult r = split(twins_[0]->on_start(), 0);
        r.append(split(twins_[1]->on_start(), 1));
        return r;
    }
    EngineResult deliver(const Message& m, ReplicaId from) override {
        EngineResult r = split(twins_[0]->on_message(m, from), 0);
        r.append(split(twins_[1]->on_message(m, from), 1));
        return r;
    }
    EngineResult timer(ViewNumber v) override {
        EngineResult r = split(twins_[0]->on_timer(v), 0);
        r.append(split(twins_[1]->on_timer(v), 1));
        return r;
    }
    ViewNumber view() const override {
        return std::max(twins_[0]->current_view(), twins_[1]->current_view());
    }

  private:
    EngineResult split(EngineResult r, int twin) {
        EngineResult out;
        out.commits = std::move(r.commits);
        out.timers = std::move(r.timers);
        out.audits = std::move(r.audits);
        for (OutboundMessage& om : r.out) {
            const auto* b = std::get_if<Block>(&om.msg);
            bool proposal = b != nullptr && b->proposer == twins_[twin]->id();
            if (!proposal || om.to.has_value()) {
                out.out.push_back(std::move(om));
                continue;
            }
            for (ReplicaId id = 0; id < n_; ++id) {
                if (id % 2 == static_cast<ReplicaId>(twin) || id == twins_[twin]->id()) {
                    out.out.push_back(OutboundMessage{om.msg, id});
                }
            }
        }
        return out;
    }

    std::uint32_t n_;
    std::unique_ptr<ReplicaEngine> twins_[2];
};

/// Runs the protocol honestly until it owns a fresh certificate as leader,
/// delivers the certificate-bearing message to a chosen subset, then crashes.
class SelectiveWithholderNode final : public StrategyNodeBase {
  public:
    using StrategyNodeBase::StrategyNodeBase;

    EngineResult deliver(const Message& m, ReplicaId from) override {
        if (halted_) return {};
        return StrategyNodeBase::deliver(m, from);
    }
    EngineResult timer(ViewNumber v) override {
        if (halted_) return {};
        return StrategyNodeBase::timer(v);
    }

  protected:
    EngineResult transform(EngineResult r) override {
        if (halted_) return {};
        EngineResult out;
        out.commits = std::move(r.commits);
        out.timers = std::move(r.timers);
        out.audits = std::move(r.audits);
        for (OutboundMessage& om : r.out) {
            if (halted_) break;  // nothing after the withheld artifact escapes
            if (is_withholdable(om)) {
                for (ReplicaId target : sim_cfg_.adversary.withhold_targets) {
                    out.out.push_back(OutboundMessage{om.msg, target});
                }
                halted_ = true;
                continue;
            }
            out.out.push_back(std::move(om));
        }
        return out;
    }

  private:
    bool is_withholdable(const OutboundMessage& om) const {
        if (sim_cfg_.protocol == ProtocolKind::FhsBasic) {
            const auto* qm = std::get_if<QcMsg>(&om.msg);
            return qm != nullptr && qm->qc.type == Phase::Precommit &&
                   qm->sender == me();
        }
        const auto* b = std::get_if<Block>(&om.msg);
        if (b == nullptr || b->proposer != me()) return false;
        const auto* qc = std::get_if<QuorumCert>(&b->justify);
        return qc != nullptr && !qc->is_genesis();
    }

    bool halted_ = false;
};

std::unique_ptr<SimNode> make_node(const SimConfig& cfg, EngineConfig ec) {
    if (!is_byzantine(cfg, ec.id)) {
        return std::make_unique<HonestNode>(make_engine(cfg.protocol, std::move(ec)));
    }
    switch (cfg.adversary.kind) {
        case StrategyKind::SilentPrimary:
            return std::make_unique<SilentPrimaryNode>(cfg, std::move(ec));
        case StrategyKind::TimeoutAbuser:
            return std::make_unique<TimeoutAbuserNode>(cfg, std::move(ec));
        case StrategyKind::Forking:
        case StrategyKind::WorstCaseRoundRobinForker:
            return std::make_unique<ForkingNode>(cfg, std::move(ec));
        case StrategyKind::EquivocatorTwins:
            return std::make_unique<EquivocatorNode>(cfg, std::move(ec));
        case StrategyKind::SelectiveQcWithholder:
            return std::make_unique<SelectiveWithholderNode>(cfg, std::move(ec));
        case StrategyKind::None:
            break;
    }
    return std::make_unique<HonestNode>(make_engine(cfg.protocol, std::move(ec)));
}

struct SimEvent {
    SimTime t = 0;
    std::uint64_t seq = 0;
    bool is_timer = false;
    // deliver
    Message msg = VoteMsg{};
    ReplicaId to = 0;
    ReplicaId from = 0;
    // timer
    ReplicaId timer_replica = 0;
    ViewNumber timer_view = 0;
};

struct EventLater {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.seq > b.seq;
    }
};

class Simulation {
  public:
    Simulation(const SimConfig& cfg, RunLimits limits)
        : cfg_(cfg),
          limits_(limits),
          rng_(cfg.seed ^ 0x5bd1e995c6b3a1ULL),
          scheme_(std::make_shared<MockAggScheme>(cfg.seed * 0x9e3779b97f4a7c15ULL + 0x1234,
                                                  cfg.n)) {}

    Trace run() {
        trace_.config_json = config_to_json_string(cfg_);
        build_nodes();
        for (ReplicaId id = 0; id < cfg_.n; ++id) {
            process_result(id, 0, nodes_[id]->start());
        }
        std::uint64_t max_events = limits_.max_events ? limits_.max_events : 20'000'000ULL;
        std::uint64_t processed = 0;
        while (!queue_.empty()) {
            SimEvent ev = queue_.top();
            queue_.pop();
            if (ev.t > cfg_.max_time) break;
            if (++processed > max_events) break;
            now_ = ev.t;
            if (ev.is_timer) {
                EngineResult r = nodes_[ev.timer_replica]->timer(ev.timer_view);
                if (!r.empty()) {
                    TraceRecord rec;
                    rec.time = now_;
                    rec.kind = RecordKind::TimerFire;
                    rec.replica = ev.timer_replica;
                    rec.view = ev.timer_view;
                    add(std::move(rec));
                }
                process_result(ev.timer_replica, now_, std::move(r));
            } else {
                TraceRecord rec;
                rec.time = now_;
                rec.kind = RecordKind::Deliver;
                rec.replica = ev.to;
                rec.peer = ev.from;
                rec.view = message_view(ev.msg);
                rec.text = message_type_name(ev.msg);
                if (const auto* b = std::get_if<Block>(&ev.msg)) rec.block = b->hash;
                add(std::move(rec));
                process_result(ev.to, now_, nodes_[ev.to]->deliver(ev.msg, ev.from));
            }
            if (honest_views_beyond_limit()) break;
        }
        TraceRecord end;
        end.time = now_;
        end.kind = RecordKind::End;
        end.view = max_honest_view();
        end.height = processed;
        add(std::move(end));
        return std::move(trace_);
    }

  private:
    void build_nodes() {
        for (ReplicaId id = 0; id < cfg_.n; ++id) {
            EngineConfig ec;
            ec.id = id;
            ec.n = cfg_.n;
            ec.f = cfg_.f;
            ec.scheme = scheme_;
            ec.schedule = cfg_.schedule;
            ec.blacklist = cfg_.blacklist;
            ec.base_timeout = cfg_.pacemaker.base_timeout;
            ec.max_doublings = cfg_.pacemaker.max_doublings;
            ec.payload_txs = cfg_.payload_txs;
            ec.payload_bytes = cfg_.payload_block_bytes;
            ec.payload_salt = 0;
            nodes_.push_back(make_node(cfg_, std::move(ec)));
        }
    }

    bool honest_views_beyond_limit() const {
        for (ReplicaId id = 0; id < cfg_.n; ++id) {
            if (is_byzantine(cfg_, id)) continue;
            if (nodes_[id]->view() <= cfg_.max_views) return false;
        }
        return true;
    }

    ViewNumber max_honest_view() const {
        ViewNumber best = 0;
        for (ReplicaId id = 0; id < cfg_.n; ++id) {
            if (is_byzantine(cfg_, id)) continue;
            best = std::max(best, nodes_[id]->view());
        }
        return best;
    }

    void add(TraceRecord rec) {
        rec.idx = trace_.records.size();
        trace_.records.push_back(std::move(rec));
    }

    void process_result(ReplicaId id, SimTime now, EngineResult r) {
        for (const AuditNote& a : r.audits) {
            TraceRecord rec;
            rec.time = now;
            rec.replica = id;
            switch (a.kind) {
                case AuditNote::Kind::ViewEnter:
                    rec.kind = RecordKind::ViewEnter;
                    rec.view = a.view;
                    rec.text = a.code;
                    break;
                case AuditNote::Kind::AggQcExtract:
                    rec.kind = RecordKind::AggQcExtract;
                    rec.view = a.view;
                    rec.aux_view = a.aux_view;
                    rec.block = a.block;
                    break;
                case AuditNote::Kind::VerifCount:
                    rec.kind = RecordKind::Verif;
                    rec.view = a.view;
                    rec.block = a.block;
                    rec.count = a.delta;
                    rec.flag = a.aggqc;
                    rec.flag2 = a.build_path;
                    break;
                case AuditNote::Kind::Violation:
                    rec.kind = RecordKind::Violation;
                    rec.text = a.code;
                    break;
            }
            add(std::move(rec));
        }
        for (const CommitNote& c : r.commits) {
            TraceRecord rec;
            rec.time = now;
            rec.kind = RecordKind::Commit;
            rec.replica = id;
            rec.block = c.block;
            rec.height = c.height;
            rec.view = c.block_view;
            rec.aux_view = c.trigger_view;
            rec.proposer = c.proposer;
            add(std::move(rec));
        }
        for (const TimerRequest& t : r.timers) {
            SimEvent ev;
            ev.t = now + t.delay;
            ev.seq = next_seq_++;
            ev.is_timer = true;
            ev.timer_replica = id;
            ev.timer_view = t.view;
            queue_.push(std::move(ev));
        }
        for (OutboundMessage& om : r.out) {
            route(id, om, now);
        }
    }

    void note_artifacts(const Message& m, SimTime now) {
        if (const auto* b = std::get_if<Block>(&m)) {
            note_block(*b, now);
        } else if (const auto* qm = std::get_if<QcMsg>(&m)) {
            note_qc(qm->qc, now);
        } else if (const auto* nv = std::get_if<NewViewMsg>(&m)) {
            note_qc(nv->prepare_qc, now);
        } else if (const auto* fr = std::get_if<FetchResponse>(&m)) {
            note_block(fr->block, now);
        }
    }

    void note_block(const Block& b, SimTime now) {
        if (const auto* qc = std::get_if<QuorumCert>(&b.justify)) {
            note_qc(*qc, now);
        } else {
            for (const auto& [sender, qc] : std::get<AggregateQc>(b.justify).members) {
                note_qc(qc, now);
            }
        }
        if (!seen_blocks_.insert(b.hash).second) return;
        TraceRecord rec;
        rec.time = now;
        rec.kind = RecordKind::Propose;
        rec.block = b.hash;
        rec.view = b.view;
        rec.parent = b.parent;
        rec.proposer = b.proposer;
        rec.flag = justify_is_aggqc(b.justify);
        rec.aux_view = justify_view(b.justify);
        rec.bytes = justify_is_aggqc(b.justify)
                        ? cfg_.bytes.aggqc_bytes(cfg_.n,
                                                 std::get<AggregateQc>(b.justify).members.size())
                        : cfg_.bytes.qc_bytes(cfg_.n);
        rec.count = b.payload.tx_count;
        add(std::move(rec));
    }

    void note_qc(const QuorumCert& qc, SimTime now) {
        if (qc.is_genesis()) return;
        auto key = std::make_tuple(qc.type, qc.view, qc.block);
        if (!seen_qcs_.insert(key).second) return;
        TraceRecord rec;
        rec.time = now;
        rec.kind = RecordKind::QcSeen;
        rec.phase = static_cast<std::uint8_t>(qc.type);
        rec.view = qc.view;
        rec.block = qc.block;
        add(std::move(rec));
    }

    bool partitioned(ReplicaId a, ReplicaId b, SimTime t) const {
        for (const PartitionSpec& p : cfg_.partitions) {
            if (t < p.from || t >= p.until) continue;
            bool a_in = std::find(p.side_a.begin(), p.side_a.end(), a) != p.side_a.end();
            bool b_in = std::find(p.side_a.begin(), p.side_a.end(), b) != p.side_a.end();
            if (a_in != b_in) return true;
        }
        return false;
    }

    void route(ReplicaId from, OutboundMessage& om, SimTime now) {
        note_artifacts(om.msg, now);
        std::vector<ReplicaId> dests;
        if (om.to.has_value()) {
            if (*om.to >= cfg_.n) return;
            dests.push_back(*om.to);
        } else {
            for (ReplicaId id = 0; id < cfg_.n; ++id) dests.push_back(id);
        }
        std::uint64_t wire = message_wire_bytes(om.msg, cfg_.bytes, cfg_.n,
                                                cfg_.payload_block_bytes);
        for (ReplicaId to : dests) {
            TraceRecord rec;
            rec.time = now;
            rec.kind = RecordKind::Send;
            rec.replica = to;
            rec.peer = from;
            rec.view = message_view(om.msg);
            rec.text = message_type_name(om.msg);
            rec.bytes = wire;
            if (const auto* b = std::get_if<Block>(&om.msg)) rec.block = b->hash;
            add(std::move(rec));

            SimTime deliver_at;
            if (to == from) {
                deliver_at = now;  // local handoff
            } else if (now >= cfg_.gst) {
                deliver_at = now + cfg_.delta;
            } else {
                if (partitioned(from, to, now)) {
                    drop_record(from, to, om.msg, now, "partition");
                    continue;
                }
                if (rng_.chance_per_mille(cfg_.pre_gst.drop_per_mille)) {
                    drop_record(from, to, om.msg, now, "loss");
                    continue;
                }
                deliver_at = now + 1 + static_cast<SimTime>(
                                           rng_.below(static_cast<std::uint64_t>(
                                               cfg_.pre_gst.max_delay)));
            }
            SimEvent ev;
            ev.t = deliver_at;
            ev.seq = next_seq_++;
            ev.msg = om.msg;
            ev.to = to;
            ev.from = from;
            queue_.push(std::move(ev));
        }
    }

    void drop_record(ReplicaId from, ReplicaId to, const Message& m, SimTime now,
                     const char* reason) {
        TraceRecord rec;
        rec.time = now;
        rec.kind = RecordKind::Drop;
        rec.replica = to;
        rec.peer = from;
        rec.view = message_view(m);
        rec.text = reason;
        add(std::move(rec));
    }

    SimConfig cfg_;
    RunLimits limits_;
    DetRng rng_;
    SchemePtr scheme_;
    std::vector<std::unique_ptr<SimNode>> nodes_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventLater> queue_;
    Trace trace_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::set<BlockHash> seen_blocks_;
    std::set<std::tuple<Phase, ViewNumber, BlockHash>> seen_qcs_;
};

}  // namespace

Trace run_simulation(const SimConfig& cfg, RunLimits limits) {
    Simulation sim(cfg, limits);
    return sim.run();
}

}  // namespace bftlab
