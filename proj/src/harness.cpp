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

#include "bftlab/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace bftlab {

namespace {

bool honest(const SimConfig& cfg, ReplicaId id) { return !is_byzantine(cfg, id); }

std::uint32_t honest_count(const SimConfig& cfg) {
    return cfg.n - static_cast<std::uint32_t>(cfg.adversary.replicas.size());
}

bool fhs_protocol(const SimConfig& cfg) {
    return cfg.protocol == ProtocolKind::FhsBasic || cfg.protocol == ProtocolKind::FhsPipelined;
}

}  // namespace

TraceIndex build_trace_index(const Trace& trace) {
    TraceIndex idx;
    idx.config = parse_scenario_json(trace.config_json, "trace-header");
    BlockInfo genesis;
    genesis.hash = genesis_hash();
    genesis.parent = genesis_hash();
    genesis.view = kGenesisView;
    idx.blocks.emplace(genesis.hash, genesis);
    for (const TraceRecord& r : trace.records) {
        if (r.kind != RecordKind::Propose) continue;
        BlockInfo b;
        b.hash = r.block;
        b.parent = r.parent;
        b.view = r.view;
        b.proposer = r.proposer;
        b.aggqc = r.flag;
        b.justify_view = r.aux_view;
        b.justify_bytes = r.bytes;
        b.txs = r.count;
        b.proposed_at = r.time;
        idx.blocks.emplace(b.hash, b);
    }
    return idx;
}

bool TraceIndex::is_ancestor(const BlockHash& a, const BlockHash& d) const {
    BlockHash cur = d;
    for (std::size_t guard = 0; guard <= blocks.size(); ++guard) {
        if (cur == a) return true;
        auto it = blocks.find(cur);
        if (it == blocks.end() || cur == genesis_hash()) return false;
        cur = it->second.parent;
    }
    return false;
}

bool TraceIndex::conflicting(const BlockHash& a, const BlockHash& b) const {
    return !is_ancestor(a, b) && !is_ancestor(b, a);
}

SafetyVerdict safety_oracle(const Trace& trace) {
    SafetyVerdict v;
    TraceIndex idx = build_trace_index(trace);
    const bool fhs = fhs_protocol(idx.config);

    // Height uniqueness across every replica's commits.
    std::map<std::uint64_t, BlockHash> by_height;
    std::vector<std::pair<BlockHash, std::uint64_t>> commits;  // block, event idx
    for (const TraceRecord& r : trace.records) {
        if (r.kind == RecordKind::Violation && honest(idx.config, r.replica) &&
            (r.text == "commit_conflict" || r.text == "hash_breach")) {
            v.ok = false;
            v.height_unique_ok = false;
            v.event_idx = r.idx;
            v.detail = "engine violation: " + r.text;
            return v;
        }
        if (r.kind != RecordKind::Commit) continue;
        if (!honest(idx.config, r.replica)) continue;  // only correct replicas count
        auto [it, fresh] = by_height.emplace(r.height, r.block);
        if (!fresh && it->second != r.block) {
            v.ok = false;
            v.height_unique_ok = false;
            v.event_idx = r.idx;
            v.detail = "two blocks committed at height " + std::to_string(r.height) + ": " +
                       it->second.short_hex() + " vs " + r.block.short_hex();
            return v;
        }
        commits.emplace_back(r.block, r.idx);
    }

    // Per-view certification uniqueness (same certificate type).
    std::map<std::pair<std::uint8_t, ViewNumber>, std::pair<BlockHash, std::uint64_t>> certs;
    std::vector<std::tuple<ViewNumber, BlockHash, std::uint64_t>> generic_certs;
    for (const TraceRecord& r : trace.records) {
        if (r.kind != RecordKind::QcSeen) continue;
        auto key = std::make_pair(r.phase, r.view);
        auto [it, fresh] = certs.emplace(key, std::make_pair(r.block, r.idx));
        if (!fresh && it->second.first != r.block) {
            v.ok = false;
            v.lemma1_ok = false;
            v.event_idx = r.idx;
            v.detail = "two certificates of one type in view " + std::to_string(r.view);
            return v;
        }
        generic_certs.emplace_back(r.view, r.block, r.idx);
    }

    if (fhs) {
        // Every certified block must have the safe-proposal shape.
        std::set<BlockHash> certified;
        for (const auto& [view, block, rec] : generic_certs) certified.insert(block);
        for (const auto& [view, block, rec] : generic_certs) {
            auto bit = idx.blocks.find(block);
            if (bit == idx.blocks.end()) continue;
            const BlockInfo& b = bit->second;
            auto pit = idx.blocks.find(b.parent);
            if (pit == idx.blocks.end()) continue;
            bool shape_ok = b.aggqc ? pit->second.view == b.justify_view
                                    : (b.view == b.justify_view + 1 &&
                                       pit->second.view == b.justify_view);
            if (!shape_ok) {
                v.ok = false;
                v.antiforking_ok = false;
                v.event_idx = rec;
                v.detail = "certified block " + block.short_hex() + " violates safe-proposal";
                return v;
            }
        }
        // No certificate above a commit batch's head may conflict with it.
        // Certificates below the head can exist on dead branches (they are
        // never selected as highQC); ancestors committed through the closure
        // are covered transitively by their head.
        std::vector<std::pair<BlockHash, std::uint64_t>> heads;
        {
            const TraceRecord* prev = nullptr;
            for (const TraceRecord& r : trace.records) {
                if (r.kind != RecordKind::Commit || !honest(idx.config, r.replica)) continue;
                if (prev != nullptr && !(prev->replica == r.replica && prev->time == r.time &&
                                         prev->aux_view == r.aux_view)) {
                    heads.emplace_back(prev->block, prev->idx);
                }
                prev = &r;
            }
            if (prev != nullptr) heads.emplace_back(prev->block, prev->idx);
        }
        for (const auto& [cblock, cidx] : heads) {
            auto bit = idx.blocks.find(cblock);
            if (bit == idx.blocks.end()) continue;
            ViewNumber cview = bit->second.view;
            for (const auto& [qview, qblock, qidx] : generic_certs) {
                if (qview <= cview || !idx.known(qblock)) continue;
                if (idx.conflicting(cblock, qblock)) {
                    v.ok = false;
                    v.fig8_ok = false;
                    v.event_idx = std::max(cidx, qidx);
                    v.detail = "certificate at view " + std::to_string(qview) +
                               " conflicts with committed head " + cblock.short_hex();
                    return v;
                }
            }
        }
    }
    return v;
}

LivenessVerdict liveness_oracle(const Trace& trace, ViewNumber bound_views) {
    LivenessVerdict v;
    TraceIndex idx = build_trace_index(trace);
    const SimConfig& cfg = idx.config;
    v.bound = bound_views == 0 ? 2 * cfg.n : bound_views;

    // First honest entry per view. Heights are sampled at simulated-time
    // granularity: a commit and a view entry in the same tick belong to one
    // protocol step and must not order-skew the verdict.
    std::map<ViewNumber, SimTime> entry_time;
    std::map<SimTime, std::uint64_t> height_by_time;
    std::uint64_t height_now = 0;
    for (const TraceRecord& r : trace.records) {
        if (r.kind == RecordKind::Commit && honest(cfg, r.replica)) {
            height_now = std::max(height_now, r.height);
        }
        height_by_time[r.time] = height_now;
        if (r.kind == RecordKind::ViewEnter && honest(cfg, r.replica)) {
            entry_time.emplace(r.view, r.time);
        }
    }
    std::uint64_t final_height = height_now;
    auto height_at = [&](SimTime t) {
        auto it = height_by_time.upper_bound(t);
        if (it == height_by_time.begin()) return std::uint64_t{0};
        return std::prev(it)->second;
    };
    std::map<ViewNumber, std::pair<SimTime, std::uint64_t>> entries;
    for (const auto& [view, t] : entry_time) {
        entries.emplace(view, std::make_pair(t, height_at(t)));
    }
    // Progress is demanded from the first view entered after the network has
    // had one timeout period to settle past GST; replicas may still be
    // re-synchronizing from the asynchronous era right at the boundary.
    const SimTime settled = cfg.gst + cfg.pacemaker.base_timeout;

    std::vector<std::pair<ViewNumber, std::pair<SimTime, std::uint64_t>>> ordered(
        entries.begin(), entries.end());
    for (const auto& [view, info] : ordered) {
        if (info.first < settled) continue;
        v.applicable = true;
        // Find the first entered view at or beyond view + bound.
        auto it = entries.lower_bound(view + v.bound);
        if (it == entries.end()) {
            // Window extends past the run; check against final state.
            if (final_height <= info.second &&
                entries.rbegin()->first >= view + v.bound) {
                v.ok = false;
                v.stall_view = view;
                v.detail = "no commit-height progress in views [" + std::to_string(view) +
                           ", " + std::to_string(view + v.bound) + ")";
                return v;
            }
            continue;
        }
        if (it->second.second <= info.second) {
            v.ok = false;
            v.stall_view = view;
            v.detail = "commit height stuck at " + std::to_string(info.second) +
                       " through views [" + std::to_string(view) + ", " +
                       std::to_string(it->first) + "]";
            return v;
        }
    }
    if (!v.applicable) v.detail = "run never passed gst";
    return v;
}

Lemma2Verdict lemma2_audit(const Trace& trace) {
    Lemma2Verdict v;
    TraceIndex idx = build_trace_index(trace);
    const SimConfig& cfg = idx.config;
    const std::uint32_t honest_n = honest_count(cfg);

    // Candidate B: the first block whose initial commit wave reaches only a
    // strict subset of the honest replicas.
    struct PerBlock {
        ViewNumber first_trigger = 0;
        std::set<ReplicaId> at_first;
        std::set<ReplicaId> all;
        std::map<ReplicaId, std::uint64_t> heights;
        std::uint64_t first_idx = 0;
        bool seen = false;
    };
    std::map<BlockHash, PerBlock> per_block;
    std::vector<BlockHash> order;
    for (const TraceRecord& r : trace.records) {
        if (r.kind != RecordKind::Commit || !honest(cfg, r.replica)) continue;
        PerBlock& pb = per_block[r.block];
        if (!pb.seen) {
            pb.seen = true;
            pb.first_trigger = r.aux_view;
            pb.first_idx = r.idx;
            order.push_back(r.block);
        }
        if (r.aux_view == pb.first_trigger) pb.at_first.insert(r.replica);
        pb.all.insert(r.replica);
        pb.heights[r.replica] = r.height;
    }

    for (const BlockHash& h : order) {
        const PerBlock& pb = per_block.at(h);
        if (pb.at_first.size() >= honest_n || pb.at_first.empty()) continue;
        v.applicable = true;
        v.block = h;
        v.commit_trigger_view = pb.first_trigger;
        if (pb.all.size() < honest_n) {
            v.ok = false;
            v.detail = "only " + std::to_string(pb.all.size()) + " of " +
                       std::to_string(honest_n) + " honest replicas committed " + h.short_hex();
            return v;
        }
        std::set<std::uint64_t> heights;
        for (const auto& [rep, hh] : pb.heights) heights.insert(hh);
        if (heights.size() != 1) {
            v.ok = false;
            v.detail = "replicas committed " + h.short_hex() + " at differing heights";
            return v;
        }
        for (const TraceRecord& r : trace.records) {
            if (r.kind != RecordKind::AggQcExtract) continue;
            if (r.view <= pb.first_trigger) continue;
            if (!idx.known(r.block) || !idx.is_ancestor(h, r.block)) {
                v.ok = false;
                v.detail = "extraction for view " + std::to_string(r.view) +
                           " points at " + r.block.short_hex() + ", not a descendant of " +
                           h.short_hex();
                return v;
            }
        }
        v.detail = "solo commit of " + h.short_hex() + " at trigger view " +
                   std::to_string(pb.first_trigger) + " converged";
        return v;
    }
    v.detail = "no partially-delivered commit found";
    return v;
}

std::string oracle_report_text(const SafetyVerdict& s, const LivenessVerdict& l,
                               const std::optional<Lemma2Verdict>& l2) {
    std::ostringstream os;
    os << "safety: " << (s.ok ? "PASS" : "FAIL") << "\n";
    os << "  height_uniqueness: " << (s.height_unique_ok ? "pass" : "fail") << "\n";
    os << "  per_view_cert_uniqueness: " << (s.lemma1_ok ? "pass" : "fail") << "\n";
    os << "  certified_safe_shape: " << (s.antiforking_ok ? "pass" : "fail") << "\n";
    os << "  no_conflicting_cert_above_commit: " << (s.fig8_ok ? "pass" : "fail") << "\n";
    if (!s.ok) os << "  counterexample: event " << s.event_idx << " (" << s.detail << ")\n";
    os << "liveness: " << (l.ok ? "PASS" : "FAIL");
    os << " (bound " << l.bound << " views" << (l.applicable ? "" : ", not applicable") << ")\n";
    if (!l.ok) os << "  stall: " << l.detail << "\n";
    if (l2.has_value()) {
        os << "lemma2_audit: " << (l2->ok ? "PASS" : "FAIL")
           << (l2->applicable ? "" : " (not applicable)") << "\n";
        os << "  " << l2->detail << "\n";
    }
    return os.str();
}

Metrics compute_metrics(const Trace& trace, std::uint32_t window_margin) {
    Metrics m;
    TraceIndex idx = build_trace_index(trace);
    const SimConfig& cfg = idx.config;
    m.scenario = cfg.name;
    m.protocol = protocol_name(cfg.protocol);
    m.n = cfg.n;
    m.f = cfg.f;
    m.seed = cfg.seed;
    m.views_configured = cfg.max_views;

    Blacklist no_blacklist(0);

    std::map<BlockHash, const TraceRecord*> first_commit;
    std::set<BlockHash> committed;
    std::set<std::pair<ViewNumber, BlockHash>> certified;
    for (const TraceRecord& r : trace.records) {
        switch (r.kind) {
            case RecordKind::Commit:
                if (!honest(cfg, r.replica)) break;
                if (committed.insert(r.block).second) first_commit[r.block] = &r;
                break;
            case RecordKind::QcSeen:
                certified.emplace(r.view, r.block);
                break;
            case RecordKind::ViewEnter:
                if (honest(cfg, r.replica)) {
                    m.views_completed = std::max(m.views_completed, r.view);
                    if (r.text == "timeout" || r.text == "catchup") ++m.timeouts;
                }
                break;
            case RecordKind::Propose: {
                ++m.proposals;
                if (r.flag) ++m.aggqc_blocks;
                else ++m.qc_blocks;
                m.justify_bytes_sum += r.bytes;
                m.justify_bytes_max = std::max(m.justify_bytes_max, r.bytes);
                break;
            }
            case RecordKind::Verif: {
                if (r.flag2) break;  // leader-side build check
                if (r.flag) {
                    if (m.verif_aggqc_max == 0 && m.verif_aggqc_min == 0) {
                        m.verif_aggqc_min = m.verif_aggqc_max = r.count;
                    }
                    m.verif_aggqc_min = std::min(m.verif_aggqc_min, r.count);
                    m.verif_aggqc_max = std::max(m.verif_aggqc_max, r.count);
                } else {
                    if (m.verif_qc_max == 0 && m.verif_qc_min == 0) {
                        m.verif_qc_min = m.verif_qc_max = r.count;
                    }
                    m.verif_qc_min = std::min(m.verif_qc_min, r.count);
                    m.verif_qc_max = std::max(m.verif_qc_max, r.count);
                }
                break;
            }
            case RecordKind::End:
                m.sim_time_end = r.time;
                m.events = r.height;
                break;
            default:
                break;
        }
    }

    for (const auto& [h, rec] : first_commit) {
        auto bit = idx.blocks.find(h);
        if (bit == idx.blocks.end()) continue;
        const BlockInfo& b = bit->second;
        ++m.committed_blocks;
        m.committed_payload_units += b.txs;
        bool honest_proposer = honest(cfg, b.proposer);
        if (honest_proposer) {
            ++m.committed_honest_blocks;
            m.committed_honest_payload_units += b.txs;
        }
        ++m.latency_views_hist[rec->aux_view - b.view];
        m.latency_time_sum += static_cast<std::uint64_t>(rec->time - b.proposed_at);
    }

    // Reverted = certified but conflicting with the committed chain.
    BlockHash tip = genesis_hash();
    std::uint64_t tip_height = 0;
    for (const TraceRecord& r : trace.records) {
        if (r.kind == RecordKind::Commit && r.height >= tip_height &&
            honest(cfg, r.replica)) {
            tip_height = r.height;
            tip = r.block;
        }
    }
    std::set<BlockHash> counted;
    for (const auto& [view, block] : certified) {
        if (committed.count(block) || counted.count(block) || !idx.known(block)) continue;
        if (idx.conflicting(block, tip)) {
            counted.insert(block);
            ++m.reverted_certified_blocks;
        }
    }

    // Window rate: committed honest payload per honest leader slot, over
    // views [1, max_views - margin].
    m.window_end = cfg.max_views > window_margin ? cfg.max_views - window_margin : 0;
    for (ViewNumber v = 1; v <= m.window_end; ++v) {
        ReplicaId lead = leader_for_view(v, cfg.n, cfg.schedule, no_blacklist);
        if (honest(cfg, lead)) ++m.window_honest_slots;
    }
    for (const auto& [h, rec] : first_commit) {
        auto bit = idx.blocks.find(h);
        if (bit == idx.blocks.end()) continue;
        const BlockInfo& b = bit->second;
        if (b.view >= 1 && b.view <= m.window_end && honest(cfg, b.proposer)) {
            m.window_honest_payload += b.txs;
        }
    }
    if (m.window_honest_slots > 0) {
        m.honest_rate_ppm = m.window_honest_payload * 1'000'000ULL / m.window_honest_slots;
    }
    if (m.sim_time_end > 0) {
        m.throughput_payload_per_ktime =
            m.committed_payload_units * 1000ULL / static_cast<std::uint64_t>(m.sim_time_end);
    }
    return m;
}

std::string Metrics::to_csv() const {
    std::ostringstream os;
    os << "metric,value\n";
    os << "scenario," << scenario << "\n";
    os << "protocol," << protocol << "\n";
    os << "n," << n << "\n";
    os << "f," << f << "\n";
    os << "seed," << seed << "\n";
    os << "views_configured," << views_configured << "\n";
    os << "views_completed," << views_completed << "\n";
    os << "sim_time_end," << sim_time_end << "\n";
    os << "events," << events << "\n";
    os << "committed_blocks," << committed_blocks << "\n";
    os << "committed_honest_blocks," << committed_honest_blocks << "\n";
    os << "reverted_certified_blocks," << reverted_certified_blocks << "\n";
    os << "committed_payload_units," << committed_payload_units << "\n";
    os << "committed_honest_payload_units," << committed_honest_payload_units << "\n";
    for (const auto& [lat, count] : latency_views_hist) {
        os << "latency_views_" << lat << "," << count << "\n";
    }
    os << "latency_time_sum," << latency_time_sum << "\n";
    os << "window_end," << window_end << "\n";
    os << "window_honest_slots," << window_honest_slots << "\n";
    os << "window_honest_payload," << window_honest_payload << "\n";
    os << "honest_rate_ppm," << honest_rate_ppm << "\n";
    os << "throughput_payload_per_ktime," << throughput_payload_per_ktime << "\n";
    os << "timeouts," << timeouts << "\n";
    os << "proposals," << proposals << "\n";
    os << "aggqc_blocks," << aggqc_blocks << "\n";
    os << "qc_blocks," << qc_blocks << "\n";
    os << "justify_bytes_sum," << justify_bytes_sum << "\n";
    os << "justify_bytes_max," << justify_bytes_max << "\n";
    os << "verif_aggqc_min," << verif_aggqc_min << "\n";
    os << "verif_aggqc_max," << verif_aggqc_max << "\n";
    os << "verif_qc_min," << verif_qc_min << "\n";
    os << "verif_qc_max," << verif_qc_max << "\n";
    return os.str();
}

std::string Metrics::to_records() const {
    std::string csv = to_csv();
    std::ostringstream os;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // drop header
    while (std::getline(in, line)) {
        auto comma = line.find(',');
        os << "{\"metric\":\"" << line.substr(0, comma) << "\",\"value\":\""
           << line.substr(comma + 1) << "\"}\n";
    }
    return os.str();
}

RunArtifacts run_one(const SimConfig& cfg, std::uint32_t window_margin,
                     ViewNumber liveness_bound, bool with_lemma2) {
    RunArtifacts a;
    a.trace = run_simulation(cfg);
    a.metrics = compute_metrics(a.trace, window_margin);
    a.safety = safety_oracle(a.trace);
    a.liveness = liveness_oracle(a.trace,
                                 liveness_bound != 0 ? liveness_bound : cfg.liveness_bound);
    if (with_lemma2) a.lemma2 = lemma2_audit(a.trace);
    if (!a.safety.ok) a.exit_code = 2;
    else if (a.liveness.applicable && !a.liveness.ok) a.exit_code = 3;
    return a;
}

void write_artifacts(const std::string& dir, const RunArtifacts& a) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/trace.jsonl");
        a.trace.write_jsonl(out);
    }
    {
        std::ofstream out(dir + "/metrics.csv");
        out << a.metrics.to_csv();
    }
    {
        std::ofstream out(dir + "/oracle_report.txt");
        out << oracle_report_text(a.safety, a.liveness, a.lemma2);
    }
}

SweepResult experiment_forking_sweep(const SweepSpec& spec) {
    SweepResult result;
    for (ProtocolKind protocol : spec.protocols) {
        std::uint64_t reference_ppm = 0;
        std::uint64_t prev_ppm = 0;
        bool first = true;
        for (std::uint32_t k : spec.byz_counts) {
            SimConfig cfg = spec.base;
            cfg.protocol = protocol;
            cfg.adversary = {};
            if (k > 0) {
                cfg.adversary.kind = StrategyKind::Forking;
                for (std::uint32_t i = 1; i <= k; ++i) {
                    cfg.adversary.replicas.push_back(3 * i);
                }
            }
            cfg = canonicalize_config(std::move(cfg));
            Trace trace = run_simulation(cfg);
            Metrics m = compute_metrics(trace, spec.window_margin);
            SweepRow row;
            row.protocol = protocol;
            row.byz = k;
            row.window_honest_payload = m.window_honest_payload;
            row.window_honest_slots = m.window_honest_slots;
            row.honest_rate_ppm = m.honest_rate_ppm;
            if (first) {
                reference_ppm = m.honest_rate_ppm;
                prev_ppm = m.honest_rate_ppm;
                first = false;
            }
            row.normalized_ppm =
                reference_ppm ? m.honest_rate_ppm * 1'000'000ULL / reference_ppm : 0;
            if (protocol == ProtocolKind::FhsPipelined || protocol == ProtocolKind::FhsBasic) {
                if (m.honest_rate_ppm != reference_ppm) result.fhs_flat = false;
            } else if (m.honest_rate_ppm > prev_ppm) {
                result.baseline_monotone = false;
            }
            prev_ppm = m.honest_rate_ppm;
            result.rows.push_back(row);
        }
    }
    return result;
}

std::string SweepResult::to_csv() const {
    std::ostringstream os;
    os << "protocol,byz,window_honest_payload,window_honest_slots,honest_rate_ppm,"
          "normalized_ppm\n";
    for (const SweepRow& r : rows) {
        os << protocol_name(r.protocol) << "," << r.byz << "," << r.window_honest_payload << ","
           << r.window_honest_slots << "," << r.honest_rate_ppm << "," << r.normalized_ppm
           << "\n";
    }
    return os.str();
}

RotationStats experiment_worstcase_rotation(std::uint32_t n, std::uint32_t f,
                                            std::uint64_t seed, std::uint32_t rotations) {
    SimConfig cfg;
    cfg.name = "worstcase_rotation";
    cfg.protocol = ProtocolKind::HotStuff;
    cfg.n = n;
    cfg.f = f;
    cfg.seed = seed;
    cfg.adversary.kind = StrategyKind::WorstCaseRoundRobinForker;
    cfg.max_views = static_cast<ViewNumber>(n) * rotations + 4;
    cfg = canonicalize_config(std::move(cfg));
    Trace trace = run_simulation(cfg);
    TraceIndex idx = build_trace_index(trace);

    RotationStats stats;
    stats.per_rotation.assign(rotations, {0, 0});
    std::set<BlockHash> seen;
    for (const TraceRecord& r : trace.records) {
        if (r.kind == RecordKind::ViewEnter && (r.text == "timeout" || r.text == "catchup") &&
            honest(idx.config, r.replica)) {
            ++stats.timeouts;
        }
        if (r.kind != RecordKind::Commit || !honest(idx.config, r.replica)) continue;
        if (!seen.insert(r.block).second) continue;
        if (r.aux_view == 0) continue;
        std::uint64_t rotation = (r.aux_view - 1) / n;  // trigger view windows
        if (rotation >= rotations) continue;
        auto& [count, honest_count_] = stats.per_rotation[rotation];
        ++count;
        if (honest(idx.config, r.proposer)) ++honest_count_;
    }
    return stats;
}

LatencyDistribution experiment_latency(ProtocolKind protocol, std::uint32_t n,
                                       ViewNumber views, std::uint64_t seed) {
    SimConfig cfg;
    cfg.name = "latency";
    cfg.protocol = protocol;
    cfg.n = n;
    cfg.f = (n - 1) / 3;
    cfg.seed = seed;
    cfg.max_views = views;
    Trace trace = run_simulation(cfg);
    Metrics m = compute_metrics(trace);
    LatencyDistribution dist;
    dist.hist = m.latency_views_hist;
    for (const auto& [lat, count] : dist.hist) dist.total += count;
    return dist;
}

OverheadReport overhead_model(std::uint32_t n, std::uint64_t block_bytes,
                              std::uint32_t qc_entry_bytes, std::uint32_t agg_sig_bytes) {
    OverheadReport r;
    r.n = n;
    std::uint32_t f = (n - 1) / 3;
    r.entries = 2 * f + 1;
    r.overhead_bytes =
        static_cast<std::uint64_t>(r.entries) * qc_entry_bytes + agg_sig_bytes;
    r.block_bytes = block_bytes;
    r.fraction_ppm = r.overhead_bytes * 1'000'000ULL / block_bytes;
    return r;
}

std::string OverheadReport::to_csv() const {
    std::ostringstream os;
    os << "n,entries,overhead_bytes,block_bytes,fraction_ppm\n";
    os << n << "," << entries << "," << overhead_bytes << "," << block_bytes << ","
       << fraction_ppm << "\n";
    return os.str();
}

SimConfig fuzz_config_for_seed(const SimConfig& base, std::uint64_t seed) {
    SimConfig cfg = base;
    cfg.seed = seed;
    cfg.name = base.name + "-fuzz-" + std::to_string(seed);
    DetRng rng(seed ^ (base.seed * 0x9e3779b97f4a7c15ULL) ^ 0xfadedacedecadeULL);

    static constexpr StrategyKind kMix[] = {
        StrategyKind::SilentPrimary,    StrategyKind::TimeoutAbuser,
        StrategyKind::Forking,          StrategyKind::EquivocatorTwins,
        StrategyKind::SelectiveQcWithholder,
    };
    cfg.adversary = {};
    cfg.adversary.kind = kMix[rng.below(std::size(kMix))];
    std::uint32_t byz_count = cfg.f == 0 ? 0 : 1 + static_cast<std::uint32_t>(
                                                        rng.below(cfg.f));
    std::set<ReplicaId> byz;
    while (byz.size() < byz_count) {
        byz.insert(static_cast<ReplicaId>(rng.below(cfg.n)));
    }
    cfg.adversary.replicas.assign(byz.begin(), byz.end());
    if (cfg.adversary.replicas.empty()) cfg.adversary.kind = StrategyKind::None;

    cfg.partitions.clear();
    if (cfg.gst > 4 && rng.chance_per_mille(700)) {
        SimTime from = rng.range(0, cfg.gst / 2);
        SimTime until = from + 1 + rng.range(0, cfg.gst - from - 1);
        PartitionSpec p;
        p.from = from;
        p.until = std::min<SimTime>(until, cfg.gst);
        std::uint32_t side = 1 + static_cast<std::uint32_t>(rng.below(cfg.n - 1));
        std::set<ReplicaId> in_a;
        while (in_a.size() < side) in_a.insert(static_cast<ReplicaId>(rng.below(cfg.n)));
        p.side_a.assign(in_a.begin(), in_a.end());
        cfg.partitions.push_back(std::move(p));
    }
    return canonicalize_config(std::move(cfg));
}

FuzzSummary fuzz_campaign(const SimConfig& base, std::uint64_t seeds, std::uint32_t jobs) {
    FuzzSummary summary;
    summary.runs = seeds;
    struct Slot {
        bool failed = false;
        std::uint64_t violations = 0;
        FuzzFailure failure;
    };
    std::vector<Slot> slots(seeds);

    auto work = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t s = begin; s < end; ++s) {
            SimConfig cfg = fuzz_config_for_seed(base, s + 1);
            Trace trace = run_simulation(cfg);
            SafetyVerdict verdict = safety_oracle(trace);
            for (const TraceRecord& r : trace.records) {
                if (r.kind == RecordKind::Violation) ++slots[s].violations;
            }
            if (!verdict.ok) {
                slots[s].failed = true;
                slots[s].failure = FuzzFailure{s + 1, verdict.event_idx, verdict.detail};
            }
        }
    };

    if (jobs <= 1) {
        work(0, seeds);
    } else {
        std::vector<std::thread> pool;
        std::uint64_t chunk = (seeds + jobs - 1) / jobs;
        for (std::uint32_t j = 0; j < jobs; ++j) {
            std::uint64_t begin = j * chunk;
            std::uint64_t end = std::min<std::uint64_t>(seeds, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(work, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    for (const Slot& s : slots) {
        summary.violations_seen += s.violations;
        if (s.failed) {
            ++summary.safety_failures;
            summary.failures.push_back(s.failure);
        }
    }
    return summary;
}

std::string FuzzSummary::to_text() const {
    std::ostringstream os;
    os << "runs: " << runs << "\n";
    os << "safety_failures: " << safety_failures << "\n";
    os << "engine_violation_records: " << violations_seen << "\n";
    for (const FuzzFailure& f : failures) {
        os << "FAIL seed=" << f.seed << " event=" << f.event_idx << " " << f.detail << "\n";
    }
    if (failures.empty()) os << "all seeds passed the safety oracle\n";
    return os.str();
}

}  // namespace bftlab
