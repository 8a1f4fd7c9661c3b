// Copyright 2026 The Dissim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <string_view>

#include "dissim/campaign.hpp"
#include "dissim/json_io.hpp"
#include "dissim/metrics.hpp"

using namespace dissim;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

Gate gate(BranchId id, std::optional<BranchId> parent, std::size_t offset, std::string_view magic,
          bool crash = false, std::optional<FuzzerClass> hint = std::nullopt) {
  return Gate{id, parent, offset, bytes_of(magic), crash, hint};
}

// A small target with a few independently solvable 1-byte gates.
TargetSpec easy_target() {
  return TargetSpec({gate(1, std::nullopt, 0, "A"), gate(2, std::nullopt, 1, "B"),
                     gate(3, std::nullopt, 2, "C"), gate(4, 1, 3, "D", true)},
                    8, {}, "easy");
}

CampaignConfig small_config(PolicyKind policy, std::uint32_t nodes = 2) {
  CampaignConfig cfg;
  cfg.n_nodes = nodes;
  cfg.policy = policy;
  cfg.total_ticks = 120;
  cfg.sample_interval = 30;
  cfg.execs_per_tick = 2;
  cfg.seed = 7;
  cfg.base_latency = 1;
  cfg.log_messages = true;
  return cfg;
}

}  // namespace

TEST_CASE("single-node campaign executes the configured budget") {
  CampaignConfig cfg;
  cfg.n_nodes = 1;
  cfg.policy = PolicyKind::kNone;
  cfg.total_ticks = 10;
  cfg.sample_interval = 10;
  cfg.execs_per_tick = 1;
  const auto report = run_campaign(cfg, easy_target());
  // One seed import plus one execution per tick.
  CHECK(report.total_execs == 11);
  CHECK(report.messages_sent == 0);
  CHECK(report.gating_violations == 0);
}

TEST_CASE("step past the end throws") {
  CampaignConfig cfg;
  cfg.n_nodes = 1;
  cfg.total_ticks = 2;
  cfg.sample_interval = 1;
  const TargetSpec target = easy_target();
  Campaign campaign(cfg, target);
  campaign.step();
  campaign.step();
  CHECK_THROWS_AS(campaign.step(), CampaignFinished);
}

TEST_CASE("a routed novel case appears as exactly one logged edge") {
  // Scripted: hand a crafted case to node 0 whose hash picks node 1.
  const TargetSpec target = easy_target();
  CampaignConfig cfg = small_config(PolicyKind::kSelective);
  Campaign campaign(cfg, target);

  std::vector<std::uint8_t> payload = bytes_of("A");
  while (hash_payload(payload) % 2 != 1) payload.push_back('x');
  const TestCase tc = make_test_case(payload, 0, 0);
  FuzzerNode& node0 = campaign.node(0);
  CHECK(node0.save_if_interesting(tc, node0.execute(tc.payload), 0));

  int edges = 0;
  for (const auto& e : campaign.transport().log()) {
    if (e.kind == MessageKind::kInterestingInput && e.src == 0 && e.dst == 1) ++edges;
  }
  CHECK(edges == 1);
}

TEST_CASE("reports are bit-identical for identical config and seed") {
  const TargetSpec target = easy_target();
  for (PolicyKind policy : {PolicyKind::kSelective, PolicyKind::kDynamic,
                            PolicyKind::kBaselinePeriodic}) {
    CampaignConfig cfg = small_config(policy, 3);
    const auto a = run_campaign(cfg, target);
    const auto b = run_campaign(cfg, target);
    CHECK(samples_to_csv(a) == samples_to_csv(b));
    CHECK(message_log_to_csv(a) == message_log_to_csv(b));
    CHECK(a.final_coverage == b.final_coverage);
    CHECK(a.total_sync_cost == b.total_sync_cost);
  }
}

TEST_CASE("sample cadence: one baseline plus one row per boundary") {
  CampaignConfig cfg = small_config(PolicyKind::kNone, 2);
  cfg.total_ticks = 600;
  cfg.sample_interval = 60;
  cfg.execs_per_tick = 1;
  const auto report = run_campaign(cfg, easy_target());
  // Ticks 0, 60, ..., 600: 11 rows per node.
  CHECK(report.samples.size() == 2 * 11);
  CHECK(report.samples.front().tick == 0);
  CHECK(report.samples.back().tick == 600);
  REQUIRE(report.aggregate_coverage.size() == 11);
  for (std::size_t i = 0; i < report.aggregate_coverage.size(); ++i) {
    CHECK(report.aggregate_coverage[i].tick == static_cast<Tick>(60 * i));
  }
}

TEST_CASE("after the drain nothing is in flight and queues are empty") {
  for (PolicyKind policy : {PolicyKind::kSelective, PolicyKind::kDynamic,
                            PolicyKind::kHierarchical, PolicyKind::kBaselinePeriodic}) {
    CampaignConfig cfg = small_config(policy, 4);
    cfg.class_assignment = {FuzzerClass::kAsan, FuzzerClass::kCmplog, FuzzerClass::kLaf,
                            FuzzerClass::kOther};
    cfg.per_byte_latency = Ratio{1, 2};
    cfg.base_latency = 3;
    const auto report = run_campaign(cfg, easy_target());
    CHECK(report.in_flight_after_drain == 0);
    CHECK(report.send_queues_empty_after_drain);
    CHECK(report.messages_sent == report.messages_delivered);
  }
}

TEST_CASE("coverage is monotone per node across samples") {
  CampaignConfig cfg = small_config(PolicyKind::kDynamic, 3);
  const auto report = run_campaign(cfg, easy_target());
  std::map<NodeId, MetricSample> last;
  for (const auto& s : report.samples) {
    auto it = last.find(s.node);
    if (it != last.end()) {
      CHECK(s.coverage_count >= it->second.coverage_count);
      CHECK(s.sync_cost >= it->second.sync_cost);
      CHECK(s.crashes >= it->second.crashes);
      CHECK(s.corpus_size >= it->second.corpus_size);
    }
    last[s.node] = s;
  }
}

TEST_CASE("self-sends never appear in the log") {
  for (PolicyKind policy : {PolicyKind::kSelective, PolicyKind::kDynamic,
                            PolicyKind::kHierarchical, PolicyKind::kBaselinePeriodic}) {
    CampaignConfig cfg = small_config(policy, 4);
    cfg.class_assignment = {FuzzerClass::kCmplog, FuzzerClass::kCmplog, FuzzerClass::kLaf,
                            FuzzerClass::kLaf};
    const auto report = run_campaign(cfg, easy_target());
    for (const auto& e : report.message_log) CHECK(e.src != e.dst);
  }
}

namespace {

// Stagnation bait: one easy gate, then an 8-byte wall nobody can solve
// (class hint for a class that is not present).
TargetSpec stagnating_target() {
  return TargetSpec(
      {gate(1, std::nullopt, 0, "A"),
       gate(2, 1, 1, "WALLWALL", false, FuzzerClass::kCmplog)},
      16, {}, "stagnate");
}

}  // namespace

TEST_CASE("ammuina rounds fire only when enabled and respect the cooldown") {
  CampaignConfig cfg;
  cfg.n_nodes = 2;
  cfg.policy = PolicyKind::kNone;
  cfg.class_assignment = {FuzzerClass::kOther, FuzzerClass::kOther};
  cfg.total_ticks = 400;
  cfg.sample_interval = 20;
  cfg.execs_per_tick = 2;
  cfg.seed = 3;
  cfg.base_latency = 1;
  cfg.t_inc = 1;
  cfg.t_time = 40;         // two intervals of no progress
  cfg.ammuina_cooldown = 100;
  cfg.ammuina_batch_cap = 8;

  SUBCASE("disabled: no rounds ever") {
    cfg.ammuina_enabled = false;
    const auto report = run_campaign(cfg, stagnating_target());
    CHECK(report.ammuina_round_ticks.empty());
  }
  SUBCASE("enabled: rounds happen and respect cooldown spacing") {
    cfg.ammuina_enabled = true;
    const auto report = run_campaign(cfg, stagnating_target());
    REQUIRE(!report.ammuina_round_ticks.empty());
    for (std::size_t i = 1; i < report.ammuina_round_ticks.size(); ++i) {
      CHECK(report.ammuina_round_ticks[i] - report.ammuina_round_ticks[i - 1] >=
            cfg.ammuina_cooldown);
    }
    // Rounds are ordered and inside the campaign window.
    CHECK(report.ammuina_round_ticks.front() >= cfg.t_time);
    CHECK(report.ammuina_round_ticks.back() <= cfg.total_ticks);
  }
}

TEST_CASE("run_campaign rejects invalid configs") {
  CampaignConfig cfg;
  cfg.n_nodes = 2;
  cfg.total_ticks = 100;
  cfg.sample_interval = 60;  // not a divisor
  CHECK_THROWS_AS(run_campaign(cfg, easy_target()), ConfigInvalid);
}

TEST_CASE("hierarchical campaigns only use tree edges") {
  CampaignConfig cfg = small_config(PolicyKind::kHierarchical, 6);
  cfg.class_assignment = {FuzzerClass::kAsan, FuzzerClass::kAsan, FuzzerClass::kCmplog,
                          FuzzerClass::kCmplog, FuzzerClass::kLaf, FuzzerClass::kLaf};
  cfg.inter_master_period = 20;
  cfg.total_ticks = 200;
  cfg.sample_interval = 20;
  const auto report = run_campaign(cfg, easy_target());
  const ClusterPlan plan = build_cluster_plan(cfg.class_assignment);
  for (const auto& e : report.message_log) {
    if (e.kind != MessageKind::kInterestingInput) continue;
    const bool to_own_master = plan.master_of(cfg.class_assignment[e.src]) == e.dst;
    const bool master_to_master = plan.is_master(e.src) && plan.is_master(e.dst);
    CHECK((to_own_master || master_to_master));
  }
  CHECK(report.messages_sent > 0);
}
