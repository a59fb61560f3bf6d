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

#include <cstdint>
#include <string>
#include <vector>

#include "bftlab/pacemaker.hpp"
#include "bftlab/trace.hpp"
#include "bftlab/types.hpp"

namespace bftlab {

enum class ProtocolKind : std::uint8_t { FhsBasic, FhsPipelined, HotStuff };

const char* protocol_name(ProtocolKind p);

enum class StrategyKind : std::uint8_t {
    None,
    SilentPrimary,
    TimeoutAbuser,
    Forking,
    WorstCaseRoundRobinForker,
    EquivocatorTwins,
    SelectiveQcWithholder,
};

const char* strategy_name(StrategyKind s);

struct AdversarySpec {
    StrategyKind kind = StrategyKind::None;
    std::vector<ReplicaId> replicas;          // byzantine set, |set| <= f
    std::vector<ReplicaId> withhold_targets;  // SelectiveQcWithholder delivery set
};

struct PreGstModel {
    SimTime max_delay = 40;          // uniform in [1, max_delay]
    std::uint32_t drop_per_mille = 0;
};

struct PartitionSpec {
    SimTime from = 0;
    SimTime until = 0;  // half-open [from, until); must heal before GST
    std::vector<ReplicaId> side_a;
};

struct PacemakerConfig {
    SimTime base_timeout = 80;
    std::uint32_t max_doublings = 20;
};

/// Wire-size model. A certificate entry is bitmap + view + hash + aggregate
/// signature unless an explicit entry size is configured (the overhead
/// experiments calibrate one).
struct ByteModelConfig {
    std::uint32_t hash_bytes = 32;
    std::uint32_t sig_bytes = 48;
    std::uint32_t agg_sig_bytes = 48;
    std::uint32_t view_bytes = 8;
    std::uint32_t header_bytes = 64;
    std::uint32_t qc_entry_override = 0;

    std::uint64_t bitmap_bytes(std::uint32_t n) const { return (n + 7) / 8; }
    std::uint64_t qc_bytes(std::uint32_t n) const {
        if (qc_entry_override != 0) return qc_entry_override;
        return bitmap_bytes(n) + view_bytes + hash_bytes + agg_sig_bytes;
    }
    std::uint64_t aggqc_bytes(std::uint32_t n, std::size_t members) const {
        return members * qc_bytes(n) + agg_sig_bytes;
    }
};

struct SimConfig {
    std::string name = "scenario";
    ProtocolKind protocol = ProtocolKind::FhsPipelined;
    std::uint32_t n = 4;
    std::uint32_t f = 1;
    std::uint64_t seed = 1;
    SimTime gst = 0;
    SimTime delta = 10;
    SimTime max_time = 1'000'000'000;
    ViewNumber max_views = 50;
    PreGstModel pre_gst;
    std::vector<PartitionSpec> partitions;
    AdversarySpec adversary;
    ScheduleConfig schedule;
    BlacklistConfig blacklist;
    PacemakerConfig pacemaker;
    std::uint32_t payload_txs = 100;
    std::uint64_t payload_block_bytes = 1u << 20;
    ByteModelConfig bytes;
    ViewNumber liveness_bound = 0;  // oracle window; 0 = 2n
};

/// Empty when valid; otherwise one message per problem.
std::vector<std::string> validate_config(const SimConfig& cfg);

/// Canonicalizes derived fields (e.g. the worst-case forker's byzantine
/// placement when none is given).
SimConfig canonicalize_config(SimConfig cfg);

bool is_byzantine(const SimConfig& cfg, ReplicaId id);

std::uint64_t message_wire_bytes(const Message& m, const ByteModelConfig& bytes,
                                 std::uint32_t n, std::uint64_t payload_block_bytes);

struct RunLimits {
    std::uint64_t max_events = 0;  // 0 = default cap
};

/// Deterministic discrete-event execution: the trace is a pure function of
/// the config.
Trace run_simulation(const SimConfig& cfg, RunLimits limits = {});

}  // namespace bftlab
