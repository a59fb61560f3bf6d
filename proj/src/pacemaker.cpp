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

#include "bftlab/pacemaker.hpp"

#include <algorithm>

namespace bftlab {

bool Blacklist::contains(ReplicaId id) const {
    return std::find(entries_.begin(), entries_.end(), id) != entries_.end();
}

void Blacklist::add(ReplicaId id) {
    if (capacity_ == 0 || contains(id)) return;
    if (entries_.size() >= capacity_) entries_.pop_front();
    entries_.push_back(id);
}

ReplicaId leader_for_view(ViewNumber view, std::uint32_t n, const ScheduleConfig& schedule,
                          const Blacklist& blacklist) {
    if (schedule.kind == ScheduleKind::Scripted) {
        if (schedule.script.empty()) return 0;
        return schedule.script[view % schedule.script.size()];
    }
    std::vector<ReplicaId> eligible;
    eligible.reserve(n);
    for (ReplicaId id = 0; id < n; ++id) {
        if (!blacklist.contains(id)) eligible.push_back(id);
    }
    if (eligible.empty()) {
        // Degenerate configuration; fall back to the full set.
        for (ReplicaId id = 0; id < n; ++id) eligible.push_back(id);
    }
    if (schedule.kind == ScheduleKind::RoundRobin) {
        return eligible[view % eligible.size()];
    }
    Hasher h(schedule.seed);
    h.update_str("leader");
    h.update_u64(view);
    return eligible[h.finalize().w[0] % eligible.size()];
}

BlacklistTracker::BlacklistTracker(BlacklistConfig cfg, std::uint32_t n, std::uint32_t f,
                                   ScheduleConfig schedule)
    : cfg_(cfg), n_(n), schedule_(std::move(schedule)) {
    timeline_.push_back(Snapshot{0, Blacklist(cfg.enabled ? f : 0)});
}

void BlacklistTracker::on_committed(ViewNumber parent_view, ViewNumber block_view) {
    if (!cfg_.enabled) return;
    for (ViewNumber v = parent_view + 1; v < block_view; ++v) {
        ReplicaId offender = leader_for_view(v, n_, schedule_, blacklist_at(v));
        std::uint32_t& count = timeout_counts_[offender];
        ++count;
        if (count >= cfg_.threshold) {
            count = 0;
            Blacklist next = timeline_.back().list;
            next.add(offender);
            // Activation is deferred so every replica has committed the
            // evidencing block long before the mapping changes.
            timeline_.push_back(Snapshot{block_view + 2 * n_, std::move(next)});
        }
    }
}

const Blacklist& BlacklistTracker::blacklist_at(ViewNumber view) const {
    for (auto it = timeline_.rbegin(); it != timeline_.rend(); ++it) {
        if (it->from <= view) return it->list;
    }
    return timeline_.front().list;
}

ReplicaId BlacklistTracker::leader(ViewNumber view) const {
    return leader_for_view(view, n_, schedule_, blacklist_at(view));
}

SimTime BackoffTimer::current() const {
    std::uint32_t doublings = std::min(failures_, max_doublings_);
    return base_ << doublings;
}

void BackoffTimer::on_success() { failures_ = 0; }

void BackoffTimer::on_failure() {
    if (failures_ < max_doublings_) ++failures_;
    else failures_ = max_doublings_;
}

}  // namespace bftlab
