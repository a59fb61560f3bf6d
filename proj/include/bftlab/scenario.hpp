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

#include <stdexcept>
#include <string>
#include <vector>

#include "bftlab/simnet.hpp"

namespace bftlab {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scenario files are JSON, one object per run configuration. See README
/// for the schema; unknown keys are rejected to catch typos.
SimConfig parse_scenario_json(const std::string& text, const std::string& origin = "scenario");
SimConfig load_scenario_file(const std::string& path);

std::string config_to_json_string(const SimConfig& cfg);

/// Sweep file: a base scenario plus the byzantine counts and protocols to
/// sweep over.
struct SweepSpec {
    SimConfig base;
    std::vector<std::uint32_t> byz_counts;
    std::vector<ProtocolKind> protocols;
    std::uint32_t window_margin = 6;
};

SweepSpec parse_sweep_json(const std::string& text, const std::string& origin = "sweep");
SweepSpec load_sweep_file(const std::string& path);

bool looks_like_sweep_json(const std::string& text);

}  // namespace bftlab
