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
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "dissim/core.hpp"

namespace dissim {

// Immutable snapshot of what a node knows when it makes a routing decision.
struct PolicyContext {
  NodeId me = 0;
  std::uint32_t n_nodes = 1;
  FuzzerClass my_class = FuzzerClass::kOther;
  std::span<const FuzzerClass> class_assignment;
  Tick now = 0;
};

// --- Selective dissemination -------------------------------------------
//
// Routes an interesting input to the single rank hash(payload) mod N.
// Returns nullopt when the hash picks the caller itself (kept locally;
// nodes never self-send).
std::optional<NodeId> route_selective(const TestCase& tc, const PolicyContext& ctx);

// --- Dynamic dissemination with utilization feedback --------------------
//
// Per-node registry of how useful each peer's inputs have been locally
// (scores, updated on reception) and which peers still accept inputs from
// this node (interested, trimmed by low-utility notices). A rank removed
// from `interested` is never re-admitted for the rest of the campaign.
struct UtilityDirectory {
  std::map<NodeId, std::int64_t> scores;  // absent rank reads as 0
  std::set<NodeId> interested;
  std::int64_t u_min = -5;

  std::int64_t score_of(NodeId r) const {
    auto it = scores.find(r);
    return it == scores.end() ? 0 : it->second;
  }

  // All peers start interested with a zero score.
  static UtilityDirectory for_campaign(NodeId me, std::uint32_t n_nodes, std::int64_t u_min);
};

// Picks the interested peer with the highest score (ties to the lowest
// rank). With no interested peer left, falls back to selective hashing so a
// fully partitioned node does not go silent.
std::optional<NodeId> route_dynamic(const TestCase& tc, const UtilityDirectory& dir,
                                    const PolicyContext& ctx);

// Receiver-side bookkeeping for one evaluated input from `sender`: score
// moves by +/-1. Returns the stop-sending notice to transmit exactly when
// the decrement crosses u_min from above (at most once per sender per
// crossing).
std::optional<Message> record_evaluation(UtilityDirectory& dir, NodeId me, NodeId sender,
                                         bool useful);

// Sender-side reaction to a stop-sending notice; idempotent.
void handle_low_utility(UtilityDirectory& dir, NodeId notice_from);

// --- Hierarchical dissemination across fuzzer clusters ------------------
//
// Nodes sharing a fuzzer class form a cluster; the lowest rank of each
// cluster is its master. Secondaries send only to their own master; masters
// buffer and periodically broadcast the delta to peer masters.
struct ClusterPlan {
  std::map<FuzzerClass, std::vector<NodeId>> clusters;  // rank-sorted
  std::map<FuzzerClass, NodeId> master;

  bool is_master(NodeId n) const;
  NodeId master_of(FuzzerClass c) const { return master.at(c); }
  std::vector<NodeId> peer_masters(NodeId me) const;
};

ClusterPlan build_cluster_plan(std::span<const FuzzerClass> class_assignment);

// Master-side buffer of cases not yet synced to peer masters (delta since
// the previous period boundary).
struct HierarchicalState {
  std::vector<TestCase> outbox;
};

// Immediate destinations for an interesting case: [my master] for a
// secondary, nothing for a master (the case goes to the outbox instead).
std::vector<NodeId> route_hierarchical(const TestCase& tc, const ClusterPlan& plan,
                                       const PolicyContext& ctx, HierarchicalState& state);

// At ticks where now % period == 0, a master hands its buffered delta to
// every peer master and the outbox resets. `utility_filter`, when given,
// enables the dynamic-integration variant: peers that objected via
// low-utility notices (dropped from the interested set) are skipped.
std::vector<std::pair<NodeId, TestCase>> flush_inter_master(const ClusterPlan& plan,
                                                            const PolicyContext& ctx,
                                                            HierarchicalState& state, Tick now,
                                                            Tick period,
                                                            const UtilityDirectory* utility_filter);

// --- Ammuina mode --------------------------------------------------------
//
// Dual-threshold stagnation trigger: a node asks for an all-node exchange
// when its coverage increment stayed below t_inc for at least t_time and
// the cooldown since the previous round has passed.
struct AmmuinaState {
  Tick last_progress_tick = 0;  // last stats update with increment >= t_inc
  Tick last_round_tick = 0;
  bool pending_request = false;
};

enum class StagnationCheck : std::uint8_t { kNoTrigger = 0, kTrigger };

// Called at every stats-update boundary with the coverage gained since the
// previous boundary. Progress (increment >= t_inc) resets the stagnation
// clock and never triggers.
StagnationCheck check_stagnation(AmmuinaState& st, std::int64_t coverage_increment, Tick now,
                                 const CampaignConfig& cfg);

// --- Baseline: periodic batched full broadcast ---------------------------
//
// Stand-in for filesystem-based corpus sync: interesting cases are buffered
// and every `period` ticks the whole batch goes to every other node. The
// campaign charges these sends c_file instead of c_send.
struct BaselineState {
  std::vector<TestCase> outbox;
};

void route_baseline(const TestCase& tc, BaselineState& state);

std::vector<std::pair<NodeId, TestCase>> flush_baseline(const PolicyContext& ctx,
                                                        BaselineState& state, Tick now,
                                                        Tick period);

// --- Per-node policy engine ----------------------------------------------
//
// Uniform facade the fuzzer loop talks to, bundling the per-node state of
// whichever policy the campaign runs.
class PolicyEngine {
 public:
  PolicyEngine(PolicyKind kind, NodeId me, const CampaignConfig& cfg, const ClusterPlan* plan);

  PolicyKind kind() const { return kind_; }

  // Destinations an interesting case should be sent to right now. Buffering
  // policies may return nothing and emit later through flush().
  std::vector<NodeId> on_interesting(const TestCase& tc, const PolicyContext& ctx);

  struct FlushSend {
    NodeId dest;
    TestCase test_case;
    bool charge_as_file = false;
  };

  // Periodic buffered sends due at `now` (inter-master sync, baseline
  // broadcast). Empty for the other policies.
  std::vector<FlushSend> flush(const PolicyContext& ctx, Tick now);

  // Whether received inputs feed utility scores back to their senders.
  bool wants_utility_feedback() const { return kind_ == PolicyKind::kDynamic; }

  UtilityDirectory& directory() { return directory_; }
  const UtilityDirectory& directory() const { return directory_; }

 private:
  PolicyKind kind_;
  UtilityDirectory directory_;
  HierarchicalState hierarchical_;
  BaselineState baseline_;
  const ClusterPlan* plan_;  // required for kHierarchical
  Tick inter_master_period_;
  Tick baseline_period_;
};

}  // namespace dissim
