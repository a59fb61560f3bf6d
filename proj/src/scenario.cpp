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

#include "bftlab/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bftlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ScenarioError(origin + ": " + what);
}

ProtocolKind protocol_from_string(const std::string& s, const std::string& origin) {
    if (s == "fhs_basic") return ProtocolKind::FhsBasic;
    if (s == "fhs_pipelined") return ProtocolKind::FhsPipelined;
    if (s == "hotstuff") return ProtocolKind::HotStuff;
    fail(origin, "unknown protocol '" + s + "'");
}

StrategyKind strategy_from_string(const std::string& s, const std::string& origin) {
    if (s == "none") return StrategyKind::None;
    if (s == "silent_primary") return StrategyKind::SilentPrimary;
    if (s == "timeout_abuser") return StrategyKind::TimeoutAbuser;
    if (s == "forking") return StrategyKind::Forking;
    if (s == "worstcase_rr_forking") return StrategyKind::WorstCaseRoundRobinForker;
    if (s == "twins") return StrategyKind::EquivocatorTwins;
    if (s == "selective_withhold") return StrategyKind::SelectiveQcWithholder;
    fail(origin, "unknown adversary strategy '" + s + "'");
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& origin, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            fail(origin, "unknown key '" + key + "' in " + where);
        }
    }
}

std::vector<ReplicaId> id_list(const json& arr) {
    std::vector<ReplicaId> out;
    for (const auto& v : arr) out.push_back(v.get<ReplicaId>());
    return out;
}

}  // namespace

SimConfig parse_scenario_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(origin, std::string("parse error: ") + e.what());
    }
    if (!j.is_object()) fail(origin, "top level must be an object");
    check_keys(j, {"name", "protocol", "n", "f", "seed", "gst", "delta", "max_time",
                   "max_views", "pre_gst", "partitions", "adversary", "schedule", "blacklist",
                   "pacemaker", "payload", "bytes", "liveness_bound"},
               origin, "scenario");

    SimConfig cfg;
    try {
        if (j.contains("name")) cfg.name = j["name"].get<std::string>();
        cfg.protocol = protocol_from_string(j.value("protocol", "fhs_pipelined"), origin);
        cfg.n = j.value("n", cfg.n);
        cfg.f = j.value("f", cfg.f);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.gst = j.value("gst", cfg.gst);
        cfg.delta = j.value("delta", cfg.delta);
        cfg.max_time = j.value("max_time", cfg.max_time);
        cfg.max_views = j.value("max_views", cfg.max_views);
        cfg.liveness_bound = j.value("liveness_bound", cfg.liveness_bound);

        if (j.contains("pre_gst")) {
            const json& p = j["pre_gst"];
            check_keys(p, {"max_delay", "drop_per_mille"}, origin, "pre_gst");
            cfg.pre_gst.max_delay = p.value("max_delay", cfg.pre_gst.max_delay);
            cfg.pre_gst.drop_per_mille = p.value("drop_per_mille", cfg.pre_gst.drop_per_mille);
        }
        if (j.contains("partitions")) {
            for (const json& p : j["partitions"]) {
                check_keys(p, {"from", "until", "side_a"}, origin, "partition");
                PartitionSpec spec;
                spec.from = p.at("from").get<SimTime>();
                spec.until = p.at("until").get<SimTime>();
                spec.side_a = id_list(p.at("side_a"));
                cfg.partitions.push_back(std::move(spec));
            }
        }
        if (j.contains("adversary")) {
            const json& a = j["adversary"];
            check_keys(a, {"strategy", "replicas", "withhold_targets"}, origin, "adversary");
            cfg.adversary.kind = strategy_from_string(a.value("strategy", "none"), origin);
            if (a.contains("replicas")) cfg.adversary.replicas = id_list(a["replicas"]);
            if (a.contains("withhold_targets")) {
                cfg.adversary.withhold_targets = id_list(a["withhold_targets"]);
            }
        }
        if (j.contains("schedule")) {
            const json& s = j["schedule"];
            check_keys(s, {"kind", "seed", "script"}, origin, "schedule");
            std::string kind = s.value("kind", "round_robin");
            if (kind == "round_robin") cfg.schedule.kind = ScheduleKind::RoundRobin;
            else if (kind == "seeded_random") cfg.schedule.kind = ScheduleKind::SeededRandom;
            else if (kind == "scripted") cfg.schedule.kind = ScheduleKind::Scripted;
            else fail(origin, "unknown schedule kind '" + kind + "'");
            cfg.schedule.seed = s.value("seed", cfg.seed);
            if (s.contains("script")) cfg.schedule.script = id_list(s["script"]);
        } else {
            cfg.schedule.seed = cfg.seed;
        }
        if (j.contains("blacklist")) {
            const json& b = j["blacklist"];
            check_keys(b, {"enabled", "threshold"}, origin, "blacklist");
            cfg.blacklist.enabled = b.value("enabled", false);
            cfg.blacklist.threshold = b.value("threshold", cfg.blacklist.threshold);
        }
        if (j.contains("pacemaker")) {
            const json& p = j["pacemaker"];
            check_keys(p, {"base_timeout", "max_doublings"}, origin, "pacemaker");
            cfg.pacemaker.base_timeout = p.value("base_timeout", cfg.pacemaker.base_timeout);
            cfg.pacemaker.max_doublings = p.value("max_doublings", cfg.pacemaker.max_doublings);
        }
        if (j.contains("payload")) {
            const json& p = j["payload"];
            check_keys(p, {"txs_per_block", "block_bytes"}, origin, "payload");
            cfg.payload_txs = p.value("txs_per_block", cfg.payload_txs);
            cfg.payload_block_bytes = p.value("block_bytes", cfg.payload_block_bytes);
        }
        if (j.contains("bytes")) {
            const json& b = j["bytes"];
            check_keys(b, {"hash", "sig", "agg_sig", "view", "header", "qc_entry"}, origin,
                       "bytes");
            cfg.bytes.hash_bytes = b.value("hash", cfg.bytes.hash_bytes);
            cfg.bytes.sig_bytes = b.value("sig", cfg.bytes.sig_bytes);
            cfg.bytes.agg_sig_bytes = b.value("agg_sig", cfg.bytes.agg_sig_bytes);
            cfg.bytes.view_bytes = b.value("view", cfg.bytes.view_bytes);
            cfg.bytes.header_bytes = b.value("header", cfg.bytes.header_bytes);
            cfg.bytes.qc_entry_override = b.value("qc_entry", cfg.bytes.qc_entry_override);
        }
    } catch (const json::exception& e) {
        fail(origin, std::string("bad value: ") + e.what());
    }

    cfg = canonicalize_config(std::move(cfg));
    std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty()) {
        std::string joined;
        for (const std::string& e : errors) {
            if (!joined.empty()) joined += "; ";
            joined += e;
        }
        fail(origin, joined);
    }
    return cfg;
}

SimConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_json(ss.str(), path);
}

std::string config_to_json_string(const SimConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["protocol"] = protocol_name(cfg.protocol);
    j["n"] = cfg.n;
    j["f"] = cfg.f;
    j["seed"] = cfg.seed;
    j["gst"] = cfg.gst;
    j["delta"] = cfg.delta;
    j["max_time"] = cfg.max_time;
    j["max_views"] = cfg.max_views;
    j["liveness_bound"] = cfg.liveness_bound;
    j["pre_gst"] = {{"max_delay", cfg.pre_gst.max_delay},
                    {"drop_per_mille", cfg.pre_gst.drop_per_mille}};
    json parts = json::array();
    for (const PartitionSpec& p : cfg.partitions) {
        parts.push_back({{"from", p.from}, {"until", p.until}, {"side_a", p.side_a}});
    }
    j["partitions"] = parts;
    j["adversary"] = {{"strategy", strategy_name(cfg.adversary.kind)},
                      {"replicas", cfg.adversary.replicas},
                      {"withhold_targets", cfg.adversary.withhold_targets}};
    const char* sched = cfg.schedule.kind == ScheduleKind::RoundRobin    ? "round_robin"
                        : cfg.schedule.kind == ScheduleKind::SeededRandom ? "seeded_random"
                                                                           : "scripted";
    j["schedule"] = {{"kind", sched}, {"seed", cfg.schedule.seed}, {"script", cfg.schedule.script}};
    j["blacklist"] = {{"enabled", cfg.blacklist.enabled}, {"threshold", cfg.blacklist.threshold}};
    j["pacemaker"] = {{"base_timeout", cfg.pacemaker.base_timeout},
                      {"max_doublings", cfg.pacemaker.max_doublings}};
    j["payload"] = {{"txs_per_block", cfg.payload_txs}, {"block_bytes", cfg.payload_block_bytes}};
    j["bytes"] = {{"hash", cfg.bytes.hash_bytes},       {"sig", cfg.bytes.sig_bytes},
                  {"agg_sig", cfg.bytes.agg_sig_bytes}, {"view", cfg.bytes.view_bytes},
                  {"header", cfg.bytes.header_bytes},   {"qc_entry", cfg.bytes.qc_entry_override}};
    return j.dump();
}

bool looks_like_sweep_json(const std::string& text) {
    auto pos = text.find("\"sweep\"");
    return pos != std::string::npos;
}

SweepSpec parse_sweep_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(origin, std::string("parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("sweep") || !j.contains("base")) {
        fail(origin, "sweep file needs 'base' and 'sweep' objects");
    }
    check_keys(j, {"base", "sweep"}, origin, "sweep file");
    SweepSpec spec;
    spec.base = parse_scenario_json(j["base"].dump(), origin + "(base)");
    const json& s = j["sweep"];
    check_keys(s, {"byz_counts", "protocols", "window_margin"}, origin, "sweep");
    try {
        for (const auto& v : s.at("byz_counts")) {
            spec.byz_counts.push_back(v.get<std::uint32_t>());
        }
        if (s.contains("protocols")) {
            for (const auto& v : s["protocols"]) {
                spec.protocols.push_back(protocol_from_string(v.get<std::string>(), origin));
            }
        } else {
            spec.protocols.push_back(spec.base.protocol);
        }
        spec.window_margin = s.value("window_margin", spec.window_margin);
    } catch (const json::exception& e) {
        fail(origin, std::string("bad value: ") + e.what());
    }
    return spec;
}

SweepSpec load_sweep_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sweep_json(ss.str(), path);
}

}  // namespace bftlab
