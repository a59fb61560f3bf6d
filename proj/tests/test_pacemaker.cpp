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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bftlab/pacemaker.hpp"

using namespace bftlab;

TEST_CASE("round robin over the eligible set") {
    ScheduleConfig rr;
    Blacklist none(0);
    CHECK(leader_for_view(6, 4, rr, none) == 2);  // 6 mod 4
    CHECK(leader_for_view(0, 4, rr, none) == 0);
    CHECK(leader_for_view(7, 4, rr, none) == 3);

    Blacklist bl(2);
    bl.add(2);
    // Eligible set [0, 1, 3], index 6 mod 3 = 0.
    CHECK(leader_for_view(6, 4, rr, bl) == 0);
    CHECK(leader_for_view(7, 4, rr, bl) == 1);
    CHECK(leader_for_view(8, 4, rr, bl) == 3);
}

TEST_CASE("scripted schedule indexes by view") {
    ScheduleConfig s;
    s.kind = ScheduleKind::Scripted;
    s.script = {0, 3, 1};
    Blacklist none(0);
    CHECK(leader_for_view(1, 4, s, none) == 3);
    CHECK(leader_for_view(4, 4, s, none) == 3);  // wraps
}

TEST_CASE("seeded random is deterministic and blacklist-aware") {
    ScheduleConfig s;
    s.kind = ScheduleKind::SeededRandom;
    s.seed = 42;
    Blacklist none(0);
    for (ViewNumber v = 0; v < 50; ++v) {
        ReplicaId a = leader_for_view(v, 7, s, none);
        ReplicaId b = leader_for_view(v, 7, s, none);
        CHECK(a == b);
        CHECK(a < 7);
    }
    Blacklist bl(2);
    bl.add(3);
    for (ViewNumber v = 0; v < 50; ++v) {
        CHECK(leader_for_view(v, 7, s, bl) != 3);
    }
}

TEST_CASE("backoff doubles on failure, resets on success, caps") {
    BackoffTimer t(10, 20);
    CHECK(t.current() == 10);
    t.on_failure();
    t.on_failure();
    CHECK(t.current() == 40);  // base 10, two failures
    t.on_success();
    CHECK(t.current() == 10);
    for (int i = 0; i < 64; ++i) t.on_failure();
    CHECK(t.current() == 10LL << 20);  // capped at 2^20 * base
}

TEST_CASE("blacklist evicts the oldest at capacity f") {
    Blacklist bl(2);
    bl.add(10);
    bl.add(11);
    bl.add(12);  // evicts 10
    CHECK(!bl.contains(10));
    CHECK(bl.contains(11));
    CHECK(bl.contains(12));
    CHECK(bl.entries().size() == 2);
    CHECK(bl.entries().front() == 11);
}

TEST_CASE("tracker blacklists a leader after threshold gap views") {
    BlacklistConfig cfg;
    cfg.enabled = true;
    cfg.threshold = 3;
    ScheduleConfig rr;
    BlacklistTracker tracker(cfg, 4, 1, rr);

    // Views 5, 9, 13 fail; round-robin leader of each is replica 1.
    tracker.on_committed(4, 6);
    CHECK(tracker.latest().entries().empty());  // below threshold
    tracker.on_committed(8, 10);
    CHECK(tracker.latest().entries().empty());
    tracker.on_committed(12, 14);
    CHECK(tracker.latest().contains(1));
    // The change activates 2n views past the evidencing block (view 14):
    // the old mapping holds until then, so replicas that commit at slightly
    // different times never disagree on a live view's leader.
    CHECK(tracker.leader(17) == 1);
    CHECK(tracker.leader(21) == 1);
    CHECK(tracker.leader(25) != 1);
    for (ViewNumber v = 22; v < 60; ++v) CHECK(tracker.leader(v) != 1);
}

TEST_CASE("tracker disabled stays empty") {
    BlacklistConfig cfg;  // disabled
    BlacklistTracker tracker(cfg, 4, 1, ScheduleConfig{});
    for (int i = 0; i < 10; ++i) tracker.on_committed(4 * i, 4 * i + 2);
    CHECK(tracker.latest().entries().empty());
}

TEST_CASE("replicas replaying the same committed chain agree on leaders") {
    BlacklistConfig cfg;
    cfg.enabled = true;
    cfg.threshold = 2;
    ScheduleConfig rr;
    BlacklistTracker a(cfg, 7, 2, rr), b(cfg, 7, 2, rr);
    std::vector<std::pair<ViewNumber, ViewNumber>> chain{{0, 1}, {1, 3}, {3, 4}, {4, 8},
                                                         {8, 9}, {9, 12}, {12, 13}};
    for (auto [p, v] : chain) {
        a.on_committed(p, v);
        b.on_committed(p, v);
    }
    for (ViewNumber v = 0; v < 40; ++v) CHECK(a.leader(v) == b.leader(v));
}
