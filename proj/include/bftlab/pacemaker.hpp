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
#include <deque>
#include <map>
#include <vector>

#include "bftlab/types.hpp"

namespace bftlab {

enum class ScheduleKind : std::uint8_t { RoundRobin, SeededRandom, Scripted };

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::RoundRobin;
    std::uint64_t seed = 0;               // SeededRandom only
    std::vector<ReplicaId> script;        // Scripted only; indexed by view mod size
};

struct BlacklistConfig {
    bool enabled = false;
    std::uint32_t threshold = 3;  // leader timeouts before blacklisting
};

/// Ordered blacklist with capacity f; adding beyond capacity evicts the
/// oldest entry.
class Blacklist {
  public:
    explicit Blacklist(std::uint32_t capacity) : capacity_(capacity) {}

    bool contains(ReplicaId id) const;
    void add(ReplicaId id);
    const std::deque<ReplicaId>& entries() const { return entries_; }

  private:
    std::uint32_t capacity_;
    std::deque<ReplicaId> entries_;
};

ReplicaId leader_for_view(ViewNumber view, std::uint32_t n, const ScheduleConfig& schedule,
                          const Blacklist& blacklist);

/// Deterministic blacklist derivation: replay the committed chain in order;
/// every view gap between a block and its parent is a leader timeout,
/// attributed under the blacklist state active at that view. A change takes
/// effect 2n views after the block that evidenced it, so replicas that
/// commit the same chain at slightly different moments still agree on every
/// view's leader by the time the change activates.
class BlacklistTracker {
  public:
    BlacklistTracker(BlacklistConfig cfg, std::uint32_t n, std::uint32_t f,
                     ScheduleConfig schedule);

    /// Feed the next committed block (its view and its parent's view).
    void on_committed(ViewNumber parent_view, ViewNumber block_view);

    ReplicaId leader(ViewNumber view) const;
    const Blacklist& blacklist_at(ViewNumber view) const;
    const Blacklist& latest() const { return timeline_.back().list; }

  private:
    struct Snapshot {
        ViewNumber from = 0;
        Blacklist list;
    };

    BlacklistConfig cfg_;
    std::uint32_t n_;
    ScheduleConfig schedule_;
    std::vector<Snapshot> timeline_;
    std::map<ReplicaId, std::uint32_t> timeout_counts_;
};

/// Exponential backoff: current = base * 2^consecutive_failures, capped.
class BackoffTimer {
  public:
    BackoffTimer(SimTime base, std::uint32_t max_doublings)
        : base_(base), max_doublings_(max_doublings) {}

    SimTime current() const;
    void on_success();
    void on_failure();
    std::uint32_t consecutive_failures() const { return failures_; }

  private:
    SimTime base_;
    std::uint32_t max_doublings_;
    std::uint32_t failures_ = 0;
};

}  // namespace bftlab
