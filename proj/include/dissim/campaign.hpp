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

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dissim/core.hpp"
#include "dissim/fuzzer_model.hpp"
#include "dissim/policy.hpp"
#include "dissim/transport.hpp"

namespace dissim {

struct CampaignFinished : std::runtime_error {
  CampaignFinished() : std::runtime_error("campaign already ran to total_ticks") {}
};

struct ConfigInvalid : std::runtime_error {
  explicit ConfigInvalid(const std::vector<std::string>& violations);
  std::vector<std::string> violations;
};

// One row of the samples series: the state of one node at one sample tick.
struct MetricSample {
  Tick tick = 0;
  NodeId node = 0;
  std::uint64_t coverage_count = 0;
  std::uint64_t corpus_size = 0;
  Cost sync_cost = 0;
  std::uint64_t crashes = 0;
};

struct SeriesPoint {
  Tick tick = 0;
  std::uint64_t coverage = 0;
};

// Everything a finished campaign reports. (cfg, target, seed) fully
// determine the content.
struct CampaignReport {
  std::string label;
  PolicyKind policy = PolicyKind::kNone;
  std::uint64_t target_id = 0;
  std::uint64_t seed = 0;
  std::uint32_t n_nodes = 0;
  Tick total_ticks = 0;
  Tick sample_interval = 0;

  std::vector<MetricSample> samples;  // ordered by (tick, node)
  std::vector<SeriesPoint> aggregate_coverage;  // union across nodes
  std::map<FuzzerClass, std::vector<SeriesPoint>> class_coverage;

  std::uint64_t final_coverage = 0;
  std::uint64_t max_crashes = 0;
  std::optional<Tick> first_crash_tick;
  std::vector<Tick> ammuina_round_ticks;

  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t in_flight_after_drain = 0;
  bool send_queues_empty_after_drain = true;
  Cost total_sync_cost = 0;
  std::uint64_t total_execs = 0;
  std::uint64_t gating_violations = 0;

  std::vector<MessageLogEntry> message_log;  // populated when log_messages

  // Per node, the tick each branch first entered that node's coverage.
  std::vector<std::map<BranchId, Tick>> first_cover_ticks;
};

// Deterministic tick-stepped orchestrator. Within a tick every node, in
// rank order, polls send completions, drains its inbox, flushes periodic
// policy buffers, then runs execs_per_tick fuzz iterations. Samples are
// recorded after the tick counter advances onto a sample boundary; ammuina
// rounds run at the first tick after all pending requests were consumed.
class Campaign {
 public:
  // target_id identifies the target in reports (content hash of its file
  // form; 0 when unknown).
  Campaign(CampaignConfig cfg, const TargetSpec& target, std::uint64_t target_id = 0);

  // Advances one tick. Throws CampaignFinished past total_ticks.
  void step();

  // Steps to total_ticks, drains in-flight traffic, returns the report.
  CampaignReport run();

  Tick now() const { return now_; }
  const CampaignConfig& config() const { return cfg_; }
  FuzzerNode& node(NodeId r) { return *nodes_[r]; }
  InMemoryTransport& transport() { return *transport_; }

 private:
  void import_seeds();
  void record_samples(Tick t);
  void stagnation_checks(Tick t);
  void maybe_run_ammuina_round(Tick t);
  void drain();
  CampaignReport build_report();

  CampaignConfig cfg_;
  const TargetSpec& target_;
  std::uint64_t target_id_;
  std::unique_ptr<InMemoryTransport> transport_;
  RunTally tally_;
  ClusterPlan plan_;
  std::vector<std::unique_ptr<FuzzerNode>> nodes_;
  std::vector<std::uint64_t> coverage_at_last_boundary_;
  Tick now_ = 0;
  std::vector<Tick> round_ticks_;
  std::vector<MetricSample> samples_;
  std::vector<SeriesPoint> aggregate_series_;
  std::map<FuzzerClass, std::vector<SeriesPoint>> class_series_;
};

// Validates cfg (throwing ConfigInvalid on violations), runs the campaign to
// completion, and returns the report.
CampaignReport run_campaign(const CampaignConfig& cfg, const TargetSpec& target,
                            std::uint64_t target_id = 0);

}  // namespace dissim
