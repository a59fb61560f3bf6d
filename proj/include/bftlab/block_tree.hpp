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
#include <vector>

#include "bftlab/types.hpp"

namespace bftlab {

enum class InsertResult {
    Inserted,
    QuarantinedMissingParent,
    Duplicate,
    HashMismatch,  // same hash, different contents: hash-model breach
};

struct CommitOutcome {
    std::vector<BlockHash> newly_committed;  // oldest first
    bool conflict = false;      // target conflicts with an already committed block
    bool deferred = false;      // ancestors missing, retry after fetch
};

/// Per-replica fork-tolerant block store with a committed frontier.
/// Owned by exactly one engine; value semantics, no sharing.
class BlockTree {
  public:
    BlockTree();

    /// Hash consistency is the caller's duty (engines recompute hashes on
    /// receipt). Inserting a block whose parent is absent quarantines it and
    /// surfaces a fetch want.
    InsertResult insert(const Block& b);

    bool contains(const BlockHash& h) const;
    const Block* find(const BlockHash& h) const;

    /// True iff a lies on the parent path of d (a == d counts).
    /// Throws std::out_of_range on an unknown hash.
    bool is_ancestor(const BlockHash& a, const BlockHash& d) const;

    /// Neither is an ancestor of the other.
    bool conflicting(const BlockHash& b1, const BlockHash& b2) const;

    /// child.view == parent.view + 1 and child's parent pointer is parent.
    bool direct_chain(const BlockHash& child, const BlockHash& parent) const;

    std::uint64_t height(const BlockHash& h) const;

    /// Commit target plus every uncommitted ancestor, oldest first. Refuses
    /// (conflict=true) if the target does not extend the committed frontier.
    CommitOutcome commit(const BlockHash& target);

    bool is_committed(const BlockHash& h) const;
    const std::vector<BlockHash>& committed() const { return committed_; }
    const BlockHash& committed_tip() const { return committed_.back(); }

    /// Parent hashes needed to connect quarantined blocks; drained by the
    /// engine into fetch requests.
    std::vector<BlockHash> take_fetch_wants();

    /// Blocks connected to the tree by the most recent insert (the inserted
    /// block first, then any quarantined descendants it released).
    const std::vector<BlockHash>& last_connected() const { return last_connected_; }

    std::size_t size() const { return blocks_.size(); }
    std::size_t quarantined_count() const;

  private:
    struct Node {
        Block block;
        std::uint64_t height = 0;
        bool committed = false;
    };

    void connect(const Block& b);

    std::map<BlockHash, Node> blocks_;
    std::map<BlockHash, std::vector<Block>> quarantine_;  // parent -> waiting blocks
    std::vector<BlockHash> committed_;
    std::vector<BlockHash> fetch_wants_;
    std::vector<BlockHash> last_connected_;
};

}  // namespace bftlab
