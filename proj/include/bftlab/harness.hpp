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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bftlab/scenario.hpp"
#include "bftlab/simnet.hpp"
#include "bftlab/trace.hpp"

namespace bftlab {

// ---- trace indexing ------------------------------------------------------

struct BlockInfo {
    BlockHash hash{};
    BlockHash parent{};
    ViewNumber view = 0;
    ReplicaId proposer = 0;
    bool aggqc = false;
    ViewNumber justify_view = 0;
    std::uint64_t justify_bytes = 0;
    std::uint32_t txs = 0;
    SimTime proposed_at = 0;
};

/// Everything the oracles and metrics need, recomputed from the records
/// alone (plus the embedded config).
struct TraceIndex {
    SimConfig config;
    std::map<BlockHash, BlockInfo> blocks;

    bool known(const BlockHash& h) const { return blocks.count(h) != 0; }
    /// Ancestor test over the proposal graph; a == d counts as true.
    bool is_ancestor(const BlockHash& a, const BlockHash& d) const;
    bool conflicting(const BlockHash& a, const BlockHash& b) const;
};

TraceIndex build_trace_index(const Trace& trace);

// ---- oracles -------------------------------------------------------------

struct SafetyVerdict {
    bool ok = true;
    bool height_unique_ok = true;
    bool lemma1_ok = true;
    bool antiforking_ok = true;  // FHS protocols only; vacuous otherwise
    bool fig8_ok = true;         // FHS protocols only
    std::uint64_t event_idx = 0;  // first counterexample, replayable
    std::string detail;
};

/// Fails iff two conflicting blocks commit at one height anywhere, a
/// certificate pair violates per-view uniqueness, or (for the two-chain
/// protocols) a certified block escapes the safe-proposal shape or a
/// conflicting certificate exists above a committed block.
SafetyVerdict safety_oracle(const Trace& trace);

struct LivenessVerdict {
    bool ok = true;
    bool applicable = false;  // false when the run never passes GST
    ViewNumber bound = 0;
    ViewNumber stall_view = 0;
    std::string detail;
};

/// Post-GST progress: committed height strictly increases within every
/// window of bound_views consecutive entered views. bound_views == 0 uses
/// the default 2n.
LivenessVerdict liveness_oracle(const Trace& trace, ViewNumber bound_views = 0);

struct Lemma2Verdict {
    bool ok = true;
    bool applicable = false;
    BlockHash block{};
    ViewNumber commit_trigger_view = 0;
    std::string detail;
};

/// For a run where some block B first commits at a single replica: every
/// later AggregateQc extraction must point at B or a descendant, and all
/// honest replicas must eventually commit B at the same height.
Lemma2Verdict lemma2_audit(const Trace& trace);

std::string oracle_report_text(const SafetyVerdict& s, const LivenessVerdict& l,
                               const std::optional<Lemma2Verdict>& l2 = std::nullopt);

// ---- metrics -------------------------------------------------------------

struct Metrics {
    std::string scenario;
    std::string protocol;
    std::uint32_t n = 0;
    std::uint32_t f = 0;
    std::uint64_t seed = 0;
    ViewNumber views_configured = 0;
    ViewNumber views_completed = 0;
    SimTime sim_time_end = 0;
    std::uint64_t events = 0;

    std::uint64_t committed_blocks = 0;
    std::uint64_t committed_honest_blocks = 0;
    std::uint64_t reverted_certified_blocks = 0;
    std::uint64_t committed_payload_units = 0;
    std::uint64_t committed_honest_payload_units = 0;

    std::map<std::uint64_t, std::uint64_t> latency_views_hist;
    std::uint64_t latency_time_sum = 0;

    // Measurement window [1, views_configured - margin], honest leader slots.
    ViewNumber window_end = 0;
    std::uint64_t window_honest_slots = 0;
    std::uint64_t window_honest_payload = 0;
    std::uint64_t honest_rate_ppm = 0;  // payload units per honest slot, ppm

    std::uint64_t throughput_payload_per_ktime = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t proposals = 0;
    std::uint64_t aggqc_blocks = 0;
    std::uint64_t qc_blocks = 0;
    std::uint64_t justify_bytes_sum = 0;
    std::uint64_t justify_bytes_max = 0;
    std::uint32_t verif_aggqc_min = 0;
    std::uint32_t verif_aggqc_max = 0;
    std::uint32_t verif_qc_min = 0;
    std::uint32_t verif_qc_max = 0;

    std::string to_csv() const;
    std::string to_records() const;  // JSONL, one metric per line
};

Metrics compute_metrics(const Trace& trace, std::uint32_t window_margin = 6);

// ---- one full run --------------------------------------------------------

struct RunArtifacts {
    Trace trace;
    Metrics metrics;
    SafetyVerdict safety;
    LivenessVerdict liveness;
    std::optional<Lemma2Verdict> lemma2;
    int exit_code = 0;  // 0 ok, 2 safety, 3 liveness
};

RunArtifacts run_one(const SimConfig& cfg, std::uint32_t window_margin = 6,
                     ViewNumber liveness_bound = 0, bool with_lemma2 = false);

/// Writes trace.jsonl, metrics.csv and oracle_report.txt under dir.
void write_artifacts(const std::string& dir, const RunArtifacts& a);

// ---- experiments ---------------------------------------------------------

struct SweepRow {
    ProtocolKind protocol = ProtocolKind::HotStuff;
    std::uint32_t byz = 0;
    std::uint64_t window_honest_payload = 0;
    std::uint64_t window_honest_slots = 0;
    std::uint64_t honest_rate_ppm = 0;
    std::uint64_t normalized_ppm = 0;  // vs the protocol's no-adversary run
};

struct SweepResult {
    std::vector<SweepRow> rows;
    bool fhs_flat = true;            // every FHS row identical to reference
    bool baseline_monotone = true;   // HotStuff rate non-increasing in f
    std::string to_csv() const;
};

SweepResult experiment_forking_sweep(const SweepSpec& spec);

struct RotationStats {
    // Per rotation window (by commit trigger view): unique committed
    // proposals and how many had honest proposers.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> per_rotation;
    std::uint64_t timeouts = 0;
};

RotationStats experiment_worstcase_rotation(std::uint32_t n, std::uint32_t f,
                                            std::uint64_t seed, std::uint32_t rotations);

struct LatencyDistribution {
    std::map<std::uint64_t, std::uint64_t> hist;
    std::uint64_t total = 0;
    bool all_equal(std::uint64_t k) const {
        return total > 0 && hist.size() == 1 && hist.begin()->first == k;
    }
};

LatencyDistribution experiment_latency(ProtocolKind protocol, std::uint32_t n,
                                       ViewNumber views, std::uint64_t seed);

struct OverheadReport {
    std::uint32_t n = 0;
    std::uint32_t entries = 0;  // 2f+1
    std::uint64_t overhead_bytes = 0;
    std::uint64_t block_bytes = 0;
    std::uint64_t fraction_ppm = 0;  // overhead / block, parts per million
    std::string to_csv() const;
};

OverheadReport overhead_model(std::uint32_t n, std::uint64_t block_bytes,
                              std::uint32_t qc_entry_bytes, std::uint32_t agg_sig_bytes);

// ---- fuzz campaigns ------------------------------------------------------

struct FuzzFailure {
    std::uint64_t seed = 0;
    std::uint64_t event_idx = 0;
    std::string detail;
};

struct FuzzSummary {
    std::uint64_t runs = 0;
    std::uint64_t safety_failures = 0;
    std::uint64_t violations_seen = 0;  // engine-reported evidence, not failures
    std::vector<FuzzFailure> failures;  // sorted by seed
    std::string to_text() const;
};

/// Seeded campaign: each seed derives a strategy mix, byzantine set and a
/// pre-GST partition from the base scenario, runs it, and applies the safety
/// oracle. Failures carry a replayable (seed, event) pointer. jobs > 1 runs
/// seeds in parallel; aggregation is seed-ordered either way.
FuzzSummary fuzz_campaign(const SimConfig& base, std::uint64_t seeds, std::uint32_t jobs = 1);

/// The per-seed derived config (exposed for replaying a failure).
SimConfig fuzz_config_for_seed(const SimConfig& base, std::uint64_t seed);

}  // namespace bftlab
