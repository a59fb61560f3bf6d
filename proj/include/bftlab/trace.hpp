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
#include <iosfwd>
#include <string>
#include <vector>

#include "bftlab/types.hpp"

namespace bftlab {

enum class RecordKind : std::uint8_t {
    Send,
    Deliver,
    Drop,
    TimerFire,
    Propose,
    QcSeen,
    AggQcExtract,
    Verif,
    Commit,
    ViewEnter,
    Violation,
    End,
};

const char* record_kind_name(RecordKind k);

/// One simulation event. A flat struct keeps the trace trivially
/// serializable; unused fields stay at their defaults.
struct TraceRecord {
    std::uint64_t idx = 0;
    SimTime time = 0;
    RecordKind kind = RecordKind::Send;

    ReplicaId replica = 0;   // acting replica (receiver for Deliver, committer for Commit)
    ReplicaId peer = 0;      // sender for Deliver/Drop, destination for Send
    ViewNumber view = 0;
    ViewNumber aux_view = 0;  // trigger view (Commit), extracted view (AggQcExtract)
    Digest256 block{};
    Digest256 parent{};
    std::uint64_t height = 0;
    ReplicaId proposer = 0;
    std::uint8_t phase = 0;       // QcSeen: certificate type; Send/Deliver: message code
    std::uint64_t bytes = 0;      // Send: wire size; Propose: justify bytes
    std::uint32_t count = 0;      // Verif: delta; Propose: payload tx count
    bool flag = false;            // Verif: aggqc justify; Propose: aggqc; Verif: build path
    bool flag2 = false;           // Verif: build path
    std::string text;             // msg type, violation code, view-enter reason, drop reason

    std::string to_jsonl() const;
};

/// Full deterministic record of one run. config_json is the exact scenario
/// the run executed; replaying it reproduces the records byte for byte.
struct Trace {
    std::string config_json;
    std::vector<TraceRecord> records;

    void write_jsonl(std::ostream& os) const;
};

}  // namespace bftlab
