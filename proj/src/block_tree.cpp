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

#include "bftlab/block_tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace bftlab {

BlockTree::BlockTree() {
    Node g;
    g.block = genesis_block();
    g.height = 0;
    g.committed = true;
    blocks_.emplace(g.block.hash, std::move(g));
    committed_.push_back(genesis_hash());
}

InsertResult BlockTree::insert(const Block& b) {
    last_connected_.clear();
    auto it = blocks_.find(b.hash);
    if (it != blocks_.end()) {
        if (it->second.block == b) return InsertResult::Duplicate;
        return InsertResult::HashMismatch;
    }
    for (const auto& [parent, waiting] : quarantine_) {
        for (const Block& q : waiting) {
            if (q.hash == b.hash) {
                return q == b ? InsertResult::Duplicate : InsertResult::HashMismatch;
            }
        }
    }
    if (!blocks_.count(b.parent)) {
        quarantine_[b.parent].push_back(b);
        fetch_wants_.push_back(b.parent);
        return InsertResult::QuarantinedMissingParent;
    }
    connect(b);
    return InsertResult::Inserted;
}

void BlockTree::connect(const Block& b) {
    Node n;
    n.block = b;
    n.height = blocks_.at(b.parent).height + 1;
    blocks_.emplace(b.hash, std::move(n));
    last_connected_.push_back(b.hash);
    // Release any quarantined children, breadth first.
    std::vector<BlockHash> frontier{b.hash};
    while (!frontier.empty()) {
        std::vector<BlockHash> next;
        for (const BlockHash& h : frontier) {
            auto qit = quarantine_.find(h);
            if (qit == quarantine_.end()) continue;
            for (const Block& child : qit->second) {
                Node cn;
                cn.block = child;
                cn.height = blocks_.at(h).height + 1;
                blocks_.emplace(child.hash, std::move(cn));
                last_connected_.push_back(child.hash);
                next.push_back(child.hash);
            }
            quarantine_.erase(qit);
        }
        frontier = std::move(next);
    }
}

bool BlockTree::contains(const BlockHash& h) const { return blocks_.count(h) != 0; }

const Block* BlockTree::find(const BlockHash& h) const {
    auto it = blocks_.find(h);
    return it == blocks_.end() ? nullptr : &it->second.block;
}

bool BlockTree::is_ancestor(const BlockHash& a, const BlockHash& d) const {
    const Node& an = blocks_.at(a);
    const Node* cur = &blocks_.at(d);
    while (cur->height > an.height) {
        cur = &blocks_.at(cur->block.parent);
    }
    return cur->block.hash == a;
}

bool BlockTree::conflicting(const BlockHash& b1, const BlockHash& b2) const {
    return !is_ancestor(b1, b2) && !is_ancestor(b2, b1);
}

bool BlockTree::direct_chain(const BlockHash& child, const BlockHash& parent) const {
    const Node& c = blocks_.at(child);
    const Node& p = blocks_.at(parent);
    if (c.block.parent != parent) return false;
    return c.block.view == p.block.view + 1;
}

std::uint64_t BlockTree::height(const BlockHash& h) const { return blocks_.at(h).height; }

CommitOutcome BlockTree::commit(const BlockHash& target) {
    CommitOutcome out;
    auto it = blocks_.find(target);
    if (it == blocks_.end()) {
        out.deferred = true;
        return out;
    }
    if (it->second.committed) return out;

    std::vector<BlockHash> path;
    const Node* cur = &it->second;
    while (!cur->committed) {
        path.push_back(cur->block.hash);
        auto pit = blocks_.find(cur->block.parent);
        if (pit == blocks_.end()) {
            out.deferred = true;
            return out;
        }
        cur = &pit->second;
    }
    // The walk must land on the committed tip, otherwise target conflicts
    // with something already committed.
    if (cur->block.hash != committed_.back()) {
        out.conflict = true;
        return out;
    }
    std::reverse(path.begin(), path.end());
    for (const BlockHash& h : path) {
        blocks_.at(h).committed = true;
        committed_.push_back(h);
    }
    out.newly_committed = std::move(path);
    return out;
}

bool BlockTree::is_committed(const BlockHash& h) const {
    auto it = blocks_.find(h);
    return it != blocks_.end() && it->second.committed;
}

std::vector<BlockHash> BlockTree::take_fetch_wants() {
    std::vector<BlockHash> out;
    out.swap(fetch_wants_);
    // A want may have been satisfied by a later insert already.
    out.erase(std::remove_if(out.begin(), out.end(),
                             [this](const BlockHash& h) { return blocks_.count(h) != 0; }),
              out.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t BlockTree::quarantined_count() const {
    std::size_t n = 0;
    for (const auto& [parent, waiting] : quarantine_) n += waiting.size();
    return n;
}

}  // namespace bftlab
