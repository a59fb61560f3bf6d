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

#include "bftlab/types.hpp"

namespace bftlab {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Prepare: return "prepare";
        case Phase::Precommit: return "precommit";
        case Phase::Generic: return "generic";
    }
    return "?";
}

Digest256 QuorumCert::digest() const {
    Hasher h;
    h.update_str("qc");
    h.update_u8(static_cast<std::uint8_t>(type));
    h.update_u64(view);
    h.update_digest(block);
    h.update_digest(sig.tag);
    h.update_u64(sig.signers.size());
    for (ReplicaId r : sig.signers) h.update_u32(r);
    return h.finalize();
}

Digest256 AggregateQc::digest() const {
    Hasher h;
    h.update_str("aggqc");
    h.update_u64(view);
    h.update_u64(members.size());
    for (const auto& [id, qc] : members) {
        h.update_u32(id);
        h.update_digest(qc.digest());
    }
    h.update_digest(sig.tag);
    return h.finalize();
}

bool justify_is_aggqc(const Justify& j) {
    return std::holds_alternative<AggregateQc>(j);
}

ViewNumber justify_view(const Justify& j) {
    if (const auto* qc = std::get_if<QuorumCert>(&j)) return qc->view;
    const auto& agg = std::get<AggregateQc>(j);
    ViewNumber best = 0;
    for (const auto& [id, qc] : agg.members) {
        if (qc.view > best) best = qc.view;
    }
    return best;
}

Digest256 justify_digest(const Justify& j) {
    if (const auto* qc = std::get_if<QuorumCert>(&j)) return qc->digest();
    return std::get<AggregateQc>(j).digest();
}

Payload make_payload(ViewNumber view, ReplicaId proposer, std::uint32_t tx_count,
                     std::uint64_t nominal_bytes, std::uint64_t salt) {
    Payload p;
    p.tx_count = tx_count;
    p.nominal_bytes = nominal_bytes;
    Hasher h;
    h.update_str("payload");
    h.update_u64(view);
    h.update_u32(proposer);
    h.update_u32(tx_count);
    h.update_u64(nominal_bytes);
    h.update_u64(salt);
    p.digest = h.finalize();
    return p;
}

BlockHash compute_block_hash(const Block& b) {
    Hasher h;
    h.update_str("blk");
    h.update_u64(b.view);
    h.update_u32(b.proposer);
    h.update_digest(b.parent);
    h.update_digest(b.payload.digest);
    h.update_u64(b.payload.tx_count);
    h.update_u64(b.payload.nominal_bytes);
    h.update_digest(justify_digest(b.justify));
    return h.finalize();
}

namespace {

struct GenesisObjects {
    Block block;
    QuorumCert qc;

    GenesisObjects() {
        Hasher h;
        h.update_str("bftlab-genesis");
        block.view = kGenesisView;
        block.proposer = 0;
        block.payload = Payload{};
        block.hash = h.finalize();
        block.parent = block.hash;  // self-link, never traversed
        qc.type = Phase::Generic;
        qc.view = kGenesisView;
        qc.block = block.hash;
        // Canonical empty aggregate (zero signers); must match the scheme's
        // aggregate encoding so the genesis QC verifies like any other.
        Hasher agg;
        agg.update_str("agg");
        agg.update_u64(0);
        qc.sig.tag = agg.finalize();
        block.justify = qc;
    }
};

const GenesisObjects& genesis_objects() {
    static const GenesisObjects g;
    return g;
}

}  // namespace

const Block& genesis_block() { return genesis_objects().block; }
const BlockHash& genesis_hash() { return genesis_objects().block.hash; }
const QuorumCert& genesis_qc() { return genesis_objects().qc; }

const char* message_type_name(const Message& m) {
    switch (m.index()) {
        case 0: return "proposal";
        case 1: return "vote";
        case 2: return "newview";
        case 3: return "qc";
        case 4: return "fetch_req";
        case 5: return "fetch_resp";
    }
    return "?";
}

ViewNumber message_view(const Message& m) {
    if (const auto* b = std::get_if<Block>(&m)) return b->view;
    if (const auto* v = std::get_if<VoteMsg>(&m)) return v->view;
    if (const auto* nv = std::get_if<NewViewMsg>(&m)) return nv->view;
    if (const auto* qc = std::get_if<QcMsg>(&m)) return qc->qc.view;
    if (const auto* fr = std::get_if<FetchResponse>(&m)) return fr->block.view;
    return 0;
}

std::vector<std::uint8_t> vote_signing_bytes(Phase type, ViewNumber view,
                                             const BlockHash& block, ReplicaId voter) {
    std::vector<std::uint8_t> out;
    out.reserve(1 + 8 + 32 + 4 + 1);
    out.push_back(0x01);  // domain tag: vote
    out.push_back(static_cast<std::uint8_t>(type));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(view >> (8 * i)));
    for (std::uint64_t word : block.w) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
    }
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(voter >> (8 * i)));
    return out;
}

std::vector<std::uint8_t> newview_signing_bytes(ViewNumber view, const BlockHash& qc_block,
                                                ReplicaId sender) {
    std::vector<std::uint8_t> out;
    out.reserve(1 + 8 + 32 + 4);
    out.push_back(0x02);  // domain tag: newview
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(view >> (8 * i)));
    for (std::uint64_t word : qc_block.w) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
    }
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(sender >> (8 * i)));
    return out;
}

std::vector<std::uint8_t> proposal_signing_bytes(const BlockHash& block_hash) {
    std::vector<std::uint8_t> out;
    out.reserve(1 + 32);
    out.push_back(0x03);  // domain tag: proposal
    for (std::uint64_t word : block_hash.w) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
    }
    return out;
}

}  // namespace bftlab
