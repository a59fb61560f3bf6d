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

#include "bftlab/trace.hpp"

#include <ostream>
#include <sstream>

namespace bftlab {

const char* record_kind_name(RecordKind k) {
    switch (k) {
        case RecordKind::Send: return "send";
        case RecordKind::Deliver: return "deliver";
        case RecordKind::Drop: return "drop";
        case RecordKind::TimerFire: return "timer";
        case RecordKind::Propose: return "propose";
        case RecordKind::QcSeen: return "qc_seen";
        case RecordKind::AggQcExtract: return "aggqc_extract";
        case RecordKind::Verif: return "verif";
        case RecordKind::Commit: return "commit";
        case RecordKind::ViewEnter: return "view";
        case RecordKind::Violation: return "violation";
        case RecordKind::End: return "end";
    }
    return "?";
}

std::string TraceRecord::to_jsonl() const {
    // Hand-rolled with fixed key order; determinism is a contract here.
    std::ostringstream os;
    os << "{\"i\":" << idx << ",\"t\":" << time << ",\"kind\":\"" << record_kind_name(kind)
       << "\"";
    switch (kind) {
        case RecordKind::Send:
        case RecordKind::Deliver:
        case RecordKind::Drop:
            os << ",\"from\":" << peer << ",\"to\":" << replica << ",\"msg\":\"" << text
               << "\",\"view\":" << view;
            if (!block.is_zero()) os << ",\"block\":\"" << block.short_hex() << "\"";
            if (kind == RecordKind::Send) os << ",\"bytes\":" << bytes;
            break;
        case RecordKind::TimerFire:
            os << ",\"replica\":" << replica << ",\"view\":" << view;
            break;
        case RecordKind::Propose:
            os << ",\"block\":\"" << block.short_hex() << "\",\"view\":" << view
               << ",\"parent\":\"" << parent.short_hex() << "\",\"proposer\":" << proposer
               << ",\"justify\":\"" << (flag ? "aggqc" : "qc") << "\",\"justify_view\":"
               << aux_view << ",\"justify_bytes\":" << bytes << ",\"txs\":" << count;
            break;
        case RecordKind::QcSeen:
            os << ",\"qtype\":" << static_cast<unsigned>(phase) << ",\"view\":" << view
               << ",\"block\":\"" << block.short_hex() << "\"";
            break;
        case RecordKind::AggQcExtract:
            os << ",\"replica\":" << replica << ",\"proposal_view\":" << view
               << ",\"high_view\":" << aux_view << ",\"high_block\":\"" << block.short_hex()
               << "\"";
            break;
        case RecordKind::Verif:
            os << ",\"replica\":" << replica << ",\"block\":\"" << block.short_hex()
               << "\",\"justify\":\"" << (flag ? "aggqc" : "qc") << "\",\"delta\":" << count
               << ",\"path\":\"" << (flag2 ? "build" : "recv") << "\"";
            break;
        case RecordKind::Commit:
            os << ",\"replica\":" << replica << ",\"block\":\"" << block.short_hex()
               << "\",\"height\":" << height << ",\"block_view\":" << view
               << ",\"trigger_view\":" << aux_view << ",\"proposer\":" << proposer;
            break;
        case RecordKind::ViewEnter:
            os << ",\"replica\":" << replica << ",\"view\":" << view << ",\"reason\":\"" << text
               << "\"";
            break;
        case RecordKind::Violation:
            os << ",\"replica\":" << replica << ",\"code\":\"" << text << "\"";
            break;
        case RecordKind::End:
            os << ",\"views\":" << view << ",\"events\":" << height;
            break;
    }
    os << "}";
    return os.str();
}

void Trace::write_jsonl(std::ostream& os) const {
    os << "{\"kind\":\"header\",\"schema\":1,\"config\":" << config_json << "}\n";
    for (const TraceRecord& r : records) {
        os << r.to_jsonl() << "\n";
    }
}

}  // namespace bftlab
