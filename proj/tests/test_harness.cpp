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

#include <filesystem>
#include <fstream>

#include "bftlab/harness.hpp"

using namespace bftlab;

namespace {

SimConfig quick_config(ProtocolKind p, std::uint32_t n, ViewNumber views,
                       std::uint64_t seed = 1) {
    SimConfig cfg;
    cfg.name = "harness-test";
    cfg.protocol = p;
    cfg.n = n;
    cfg.f = (n - 1) / 3;
    cfg.seed = seed;
    cfg.schedule.seed = seed;
    cfg.max_views = views;
    cfg.payload_txs = 10;
    return cfg;
}

Digest256 mark(std::uint64_t x) {
    Digest256 d;
    d.w[0] = x;
    return d;
}

Trace synthetic_trace(std::vector<TraceRecord> records) {
    Trace t;
    t.config_json = config_to_json_string(quick_config(ProtocolKind::FhsPipelined, 4, 10));
    for (std::size_t i = 0; i < records.size(); ++i) records[i].idx = i;
    t.records = std::move(records);
    return t;
}

}  // namespace

TEST_CASE("safety oracle: all-honest run passes") {
    Trace t = run_simulation(quick_config(ProtocolKind::FhsPipelined, 4, 20));
    SafetyVerdict v = safety_oracle(t);
    CHECK(v.ok);
    CHECK(v.height_unique_ok);
    CHECK(v.lemma1_ok);
    CHECK(v.antiforking_ok);
    CHECK(v.fig8_ok);
}

TEST_CASE("safety oracle: a forged height conflict fails with a pointer") {
    TraceRecord a;
    a.kind = RecordKind::Commit;
    a.replica = 0;
    a.height = 5;
    a.block = mark(1);
    TraceRecord b = a;
    b.replica = 1;
    b.block = mark(2);
    Trace t = synthetic_trace({a, b});
    SafetyVerdict v = safety_oracle(t);
    CHECK(!v.ok);
    CHECK(!v.height_unique_ok);
    CHECK(v.event_idx == 1);  // replayable counterexample pointer
}

TEST_CASE("safety oracle: two certificates in one view fail the audit") {
    TraceRecord a;
    a.kind = RecordKind::QcSeen;
    a.phase = static_cast<std::uint8_t>(Phase::Generic);
    a.view = 7;
    a.block = mark(1);
    TraceRecord b = a;
    b.block = mark(2);
    Trace t = synthetic_trace({a, b});
    SafetyVerdict v = safety_oracle(t);
    CHECK(!v.ok);
    CHECK(!v.lemma1_ok);
}

TEST_CASE("safety oracle: fig. 8 partition scenario stays green") {
    SimConfig cfg = quick_config(ProtocolKind::FhsPipelined, 4, 20, 13);
    cfg.gst = 400;
    cfg.pre_gst.max_delay = 30;
    cfg.partitions.push_back(PartitionSpec{0, 350, {0, 1}});
    cfg.adversary.kind = StrategyKind::EquivocatorTwins;
    cfg.adversary.replicas = {3};
    Trace t = run_simulation(cfg);
    SafetyVerdict v = safety_oracle(t);
    CHECK(v.ok);
    CHECK(v.fig8_ok);
}

TEST_CASE("liveness oracle: honest round robin passes even with a 3-view window") {
    Trace t = run_simulation(quick_config(ProtocolKind::FhsPipelined, 4, 30));
    LivenessVerdict tight = liveness_oracle(t, 3);
    CHECK(tight.applicable);
    CHECK(tight.ok);
}

TEST_CASE("liveness oracle: a forever-silent leader schedule fails") {
    SimConfig cfg = quick_config(ProtocolKind::FhsPipelined, 4, 20);
    cfg.schedule.kind = ScheduleKind::Scripted;
    cfg.schedule.script = {3};  // every view led by the silent replica
    cfg.adversary.kind = StrategyKind::SilentPrimary;
    cfg.adversary.replicas = {3};
    Trace t = run_simulation(cfg);
    LivenessVerdict v = liveness_oracle(t);
    CHECK(v.applicable);
    CHECK(!v.ok);
    CHECK(!v.detail.empty());
}

TEST_CASE("liveness oracle: alternating byzantine leaders pass within 2n") {
    SimConfig cfg = quick_config(ProtocolKind::FhsPipelined, 4, 40, 5);
    cfg.adversary.kind = StrategyKind::TimeoutAbuser;
    cfg.adversary.replicas = {1};
    Trace t = run_simulation(cfg);
    CHECK(safety_oracle(t).ok);
    LivenessVerdict v = liveness_oracle(t);  // default bound 2n
    CHECK(v.applicable);
    CHECK(v.ok);
}

TEST_CASE("metrics recompute purely from the trace") {
    SimConfig cfg = quick_config(ProtocolKind::FhsPipelined, 4, 30);
    Trace t = run_simulation(cfg);
    Metrics m1 = compute_metrics(t);
    Metrics m2 = compute_metrics(t);
    CHECK(m1.to_csv() == m2.to_csv());
    CHECK(m1.committed_blocks == 28);  // two-view commit tail
    CHECK(m1.committed_honest_blocks == m1.committed_blocks);
    CHECK(m1.reverted_certified_blocks == 0);
    CHECK(m1.latency_views_hist.size() == 1);
    CHECK(m1.latency_views_hist.begin()->first == 2);
    CHECK(m1.honest_rate_ppm == 10'000'000);  // 10 txs per honest slot
}

TEST_CASE("latency distributions: two views pipelined, three baseline, zero basic") {
    LatencyDistribution fhs = experiment_latency(ProtocolKind::FhsPipelined, 4, 50, 1);
    CHECK(fhs.all_equal(2));
    CHECK(fhs.total == 48);

    LatencyDistribution hs = experiment_latency(ProtocolKind::HotStuff, 4, 50, 1);
    CHECK(hs.all_equal(3));
    CHECK(hs.total == 47);

    // The three-phase protocol decides inside the view that proposed.
    LatencyDistribution basic = experiment_latency(ProtocolKind::FhsBasic, 4, 50, 1);
    CHECK(basic.all_equal(0));
}

TEST_CASE("a mid-run leader failure bumps latency once, then recovery") {
    SimConfig cfg = quick_config(ProtocolKind::FhsPipelined, 4, 50, 7);
    cfg.adversary.kind = StrategyKind::SilentPrimary;
    cfg.adversary.replicas = {2};
    Trace t = run_simulation(cfg);
    Metrics m = compute_metrics(t);
    REQUIRE(!m.latency_views_hist.empty());
    CHECK(m.latency_views_hist.count(2));      // the happy stretches
    CHECK(m.latency_views_hist.size() > 1);    // the bumps around failures
    CHECK(liveness_oracle(t).ok);
}

TEST_CASE("overhead model: calibrated entry size lands on the headline numbers") {
    // Calibration: 67 entries * x ~= 14000 bytes -> x = 208.
    OverheadReport one_mb = overhead_model(100, 1u << 20, 208, 48);
    CHECK(one_mb.entries == 67);
    CHECK(one_mb.fraction_ppm >= 12'000);  // within [1.2%, 1.6%]
    CHECK(one_mb.fraction_ppm <= 16'000);

    OverheadReport two_mb = overhead_model(100, 2u << 20, 208, 48);
    // Same numerator, doubled denominator: exactly half.
    CHECK(two_mb.overhead_bytes == one_mb.overhead_bytes);
    CHECK(two_mb.fraction_ppm == one_mb.fraction_ppm / 2);

    OverheadReport small = overhead_model(4, 1u << 20, 208, 48);
    CHECK(small.entries == 3);
}

TEST_CASE("forking sweep at desk scale: baseline decays, fhs stays flat") {
    SweepSpec spec;
    spec.base = quick_config(ProtocolKind::HotStuff, 7, 46);
    spec.base.payload_txs = 100;
    spec.byz_counts = {0, 1, 2};
    spec.protocols = {ProtocolKind::HotStuff, ProtocolKind::FhsPipelined};
    SweepResult result = experiment_forking_sweep(spec);
    REQUIRE(result.rows.size() == 6);
    CHECK(result.baseline_monotone);
    CHECK(result.fhs_flat);
    CHECK(result.rows[0].normalized_ppm == 1'000'000);
    CHECK(result.rows[2].honest_rate_ppm < result.rows[0].honest_rate_ppm);
}

TEST_CASE("scenario json round trip") {
    SimConfig cfg = quick_config(ProtocolKind::FhsBasic, 7, 33, 99);
    cfg.adversary.kind = StrategyKind::SelectiveQcWithholder;
    cfg.adversary.replicas = {4};
    cfg.adversary.withhold_targets = {0};
    cfg.partitions.push_back(PartitionSpec{5, 40, {1, 2}});
    cfg.gst = 100;
    cfg.blacklist.enabled = true;
    SimConfig parsed = parse_scenario_json(config_to_json_string(cfg));
    CHECK(config_to_json_string(parsed) == config_to_json_string(cfg));
}

TEST_CASE("scenario parsing: diagnostics for broken configs") {
    CHECK_THROWS_AS(parse_scenario_json("{\"n\": 5, \"f\": 1}"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_json("{\"bogus_key\": 1}"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_json("not json at all"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_json("{\"protocol\": \"raft\"}"), ScenarioError);
}

TEST_CASE("run_one writes replayable artifacts") {
    SimConfig cfg = quick_config(ProtocolKind::FhsPipelined, 4, 12);
    RunArtifacts a = run_one(cfg);
    CHECK(a.exit_code == 0);

    std::string dir = (std::filesystem::temp_directory_path() / "bftlab_artifacts").string();
    std::filesystem::remove_all(dir);
    write_artifacts(dir, a);
    CHECK(std::filesystem::exists(dir + "/trace.jsonl"));
    CHECK(std::filesystem::exists(dir + "/metrics.csv"));
    CHECK(std::filesystem::exists(dir + "/oracle_report.txt"));

    // The trace header embeds the exact config; re-running it reproduces the
    // records byte for byte.
    std::ifstream in(dir + "/trace.jsonl");
    std::string header;
    std::getline(in, header);
    auto from = header.find("\"config\":") + 9;
    std::string cfg_json = header.substr(from, header.size() - from - 1);
    SimConfig replay_cfg = parse_scenario_json(cfg_json);
    Trace replayed = run_simulation(replay_cfg);
    CHECK(replayed.records.size() == a.trace.records.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("lemma2 audit is inapplicable on happy runs") {
    Trace t = run_simulation(quick_config(ProtocolKind::FhsPipelined, 4, 20));
    Lemma2Verdict v = lemma2_audit(t);
    CHECK(!v.applicable);
    CHECK(v.ok);
}

TEST_CASE("fuzz campaign: a quick adversarial mix stays safe") {
    SimConfig base = quick_config(ProtocolKind::FhsPipelined, 4, 24);
    base.gst = 250;
    base.pre_gst.max_delay = 40;
    base.pre_gst.drop_per_mille = 150;
    FuzzSummary summary = fuzz_campaign(base, 60, 1);
    CHECK(summary.runs == 60);
    CHECK(summary.safety_failures == 0);
    CHECK(summary.failures.empty());

    // Seed-derived configs are deterministic and valid.
    SimConfig c1 = fuzz_config_for_seed(base, 17);
    SimConfig c2 = fuzz_config_for_seed(base, 17);
    CHECK(config_to_json_string(c1) == config_to_json_string(c2));
    CHECK(validate_config(c1).empty());
}

TEST_CASE("fuzz campaign: parallel execution aggregates identically") {
    SimConfig base = quick_config(ProtocolKind::FhsBasic, 4, 16);
    base.gst = 200;
    base.pre_gst.drop_per_mille = 100;
    FuzzSummary serial = fuzz_campaign(base, 24, 1);
    FuzzSummary parallel = fuzz_campaign(base, 24, 4);
    CHECK(serial.to_text() == parallel.to_text());
}
