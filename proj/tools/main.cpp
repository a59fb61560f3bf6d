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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bftlab/harness.hpp"

namespace {

using namespace bftlab;

constexpr int kExitUsage = 64;
constexpr int kExitConfig = 4;

struct PresetEntry {
    const char* file;
    bool sweep;
};

const std::map<std::string, PresetEntry>& preset_catalog() {
    static const std::map<std::string, PresetEntry> catalog = {
        {"happy_path_fhs", {"happy_path_fhs.json", false}},
        {"happy_path_hotstuff", {"happy_path_hotstuff.json", false}},
        {"aggqc_failover", {"aggqc_failover.json", false}},
        {"forking_sweep_hotstuff", {"forking_sweep_hotstuff.json", true}},
        {"forking_sweep_fhs", {"forking_sweep_fhs.json", true}},
        {"worstcase_rotation", {"worstcase_rotation.json", false}},
        {"partition_fig8", {"partition_fig8.json", false}},
        {"twins_safety", {"twins_safety.json", false}},
        {"liveness_roundrobin", {"liveness_roundrobin.json", false}},
        {"liveness_random", {"liveness_random.json", false}},
    };
    return catalog;
}

std::string preset_dir() {
    if (const char* env = std::getenv("BFTLAB_PRESET_DIR")) return env;
    return BFTLAB_REPO_PRESET_DIR;
}

std::string default_out_dir() {
    if (const char* env = std::getenv("BFTLAB_OUT")) return env;
    return "out";
}

std::string resolve_preset(const std::string& name, bool* is_sweep) {
    auto it = preset_catalog().find(name);
    if (it == preset_catalog().end()) {
        std::cerr << "unknown preset '" << name << "'; see `bftlab presets`\n";
        std::exit(kExitUsage);
    }
    if (is_sweep != nullptr) *is_sweep = it->second.sweep;
    return preset_dir() + "/" + it->second.file;
}

std::string pick_input(const std::string& positional, const std::string& preset,
                       bool* is_sweep) {
    if (!preset.empty()) return resolve_preset(preset, is_sweep);
    if (positional.empty()) {
        std::cerr << "need a scenario file or --preset\n";
        std::exit(kExitUsage);
    }
    return positional;
}

std::string slurp_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string& input, std::uint64_t seed_override, bool has_seed,
            const std::string& out_dir, const std::string& format) {
    SimConfig cfg;
    try {
        if (looks_like_sweep_json(slurp_file(input))) {
            std::cerr << input << " is a sweep file; use `bftlab sweep`\n";
            return kExitConfig;
        }
        cfg = load_scenario_file(input);
    } catch (const ScenarioError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (has_seed) {
        cfg.seed = seed_override;
        cfg.schedule.seed = seed_override;
    }
    RunArtifacts artifacts =
        run_one(cfg, 6, 0, cfg.adversary.kind == StrategyKind::SelectiveQcWithholder);
    write_artifacts(out_dir, artifacts);
    if (format == "records") {
        std::cout << artifacts.metrics.to_records();
    } else {
        std::cout << artifacts.metrics.to_csv();
    }
    std::cout << oracle_report_text(artifacts.safety, artifacts.liveness, artifacts.lemma2);
    std::cout << "artifacts written to " << out_dir << "/\n";
    return artifacts.exit_code;
}

int cmd_sweep(const std::string& input, const std::string& out_dir) {
    SweepSpec spec;
    try {
        spec = load_sweep_file(input);
    } catch (const ScenarioError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    SweepResult result = experiment_forking_sweep(spec);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/sweep.csv");
    out << result.to_csv();
    std::cout << result.to_csv();
    std::cout << "fhs_flat: " << (result.fhs_flat ? "yes" : "no") << "\n";
    std::cout << "baseline_monotone: " << (result.baseline_monotone ? "yes" : "no") << "\n";
    std::cout << "sweep written to " << out_dir << "/sweep.csv\n";
    return 0;
}

int cmd_fuzz(const std::string& input, std::uint64_t seeds, std::uint32_t jobs,
             const std::string& out_dir) {
    SimConfig base;
    try {
        base = load_scenario_file(input);
    } catch (const ScenarioError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    FuzzSummary summary = fuzz_campaign(base, seeds, jobs);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/fuzz_summary.txt");
    out << summary.to_text();
    std::cout << summary.to_text();
    return summary.safety_failures == 0 ? 0 : 2;
}

int cmd_replay(const std::string& trace_path, std::uint64_t until) {
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "cannot open " << trace_path << "\n";
        return kExitConfig;
    }
    std::string header;
    std::getline(in, header);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "bad trace header: " << e.what() << "\n";
        return kExitConfig;
    }
    if (!h.contains("config")) {
        std::cerr << "trace header lacks embedded config\n";
        return kExitConfig;
    }
    SimConfig cfg;
    try {
        cfg = parse_scenario_json(h["config"].dump(), trace_path);
    } catch (const ScenarioError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    Trace replayed = run_simulation(cfg);
    if (until > 0 && until < replayed.records.size()) {
        replayed.records.resize(until + 1);
    }
    std::size_t tail = std::min<std::size_t>(replayed.records.size(), 12);
    std::cout << "replayed " << replayed.records.size() << " records\n";
    for (std::size_t i = replayed.records.size() - tail; i < replayed.records.size(); ++i) {
        std::cout << replayed.records[i].to_jsonl() << "\n";
    }
    SafetyVerdict verdict = safety_oracle(replayed);
    std::cout << "safety on prefix: " << (verdict.ok ? "PASS" : "FAIL") << "\n";
    if (!verdict.ok) std::cout << "  " << verdict.detail << " (event " << verdict.event_idx
                               << ")\n";
    return verdict.ok ? 0 : 2;
}

int cmd_presets() {
    std::string dir = preset_dir();
    for (const auto& [name, entry] : preset_catalog()) {
        std::cout << name << (entry.sweep ? " (sweep)" : "") << " -> " << dir << "/"
                  << entry.file << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus lab: two-chain and three-chain engines under a "
                 "deterministic adversarial network simulator"};
    app.require_subcommand(1);

    std::string scenario, preset, out_dir = default_out_dir(), format = "table";
    std::uint64_t seed = 0, seeds = 100, until = 0;
    std::uint32_t jobs = 1;

    CLI::App* run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", scenario, "scenario json file");
    run->add_option("--preset", preset, "bundled preset name");
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--format", format, "metrics format: table|records")
        ->check(CLI::IsMember({"table", "records"}));

    CLI::App* sweep = app.add_subcommand("sweep", "run a forking sweep");
    sweep->add_option("sweep_file", scenario, "sweep json file");
    sweep->add_option("--preset", preset, "bundled preset name");
    sweep->add_option("--out", out_dir, "output directory");

    CLI::App* fuzz = app.add_subcommand("fuzz", "seeded adversarial campaign");
    fuzz->add_option("scenario", scenario, "base scenario json file");
    fuzz->add_option("--preset", preset, "bundled preset name");
    fuzz->add_option("--seeds", seeds, "number of seeds");
    fuzz->add_option("--jobs", jobs, "parallel workers");
    fuzz->add_option("--out", out_dir, "output directory");

    CLI::App* replay = app.add_subcommand("replay", "re-execute a trace's config");
    replay->add_option("trace", scenario, "trace.jsonl file")->required();
    replay->add_option("--until", until, "truncate to this record index");

    app.add_subcommand("presets", "list bundled presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (run->parsed()) {
        bool is_sweep = false;
        std::string input = pick_input(scenario, preset, &is_sweep);
        if (is_sweep) {
            std::cerr << "preset '" << preset << "' is a sweep; use `bftlab sweep`\n";
            return kExitUsage;
        }
        return cmd_run(input, seed, seed_opt->count() > 0, out_dir, format);
    }
    if (sweep->parsed()) {
        bool is_sweep = true;
        std::string input = pick_input(scenario, preset, &is_sweep);
        if (!preset.empty() && !is_sweep) {
            std::cerr << "preset '" << preset << "' is a plain run; use `bftlab run`\n";
            return kExitUsage;
        }
        return cmd_sweep(input, out_dir);
    }
    if (fuzz->parsed()) {
        bool is_sweep = false;
        std::string input = pick_input(scenario, preset, &is_sweep);
        if (is_sweep) {
            std::cerr << "fuzz needs a run preset, not a sweep\n";
            return kExitUsage;
        }
        return cmd_fuzz(input, seeds, jobs, out_dir);
    }
    if (replay->parsed()) return cmd_replay(scenario, until);
    return cmd_presets();
}
