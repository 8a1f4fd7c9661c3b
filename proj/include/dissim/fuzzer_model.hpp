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
#include <stdexcept>
#include <string>
#include <vector>

#include "dissim/core.hpp"
#include "dissim/policy.hpp"
#include "dissim/rng.hpp"
#include "dissim/transport.hpp"

namespace dissim {

struct InputTooLong : std::runtime_error {
  InputTooLong() : std::runtime_error("payload exceeds max_input_len") {}
};

// Branch 0 is the implicit always-covered root every gate forest hangs off.
inline constexpr BranchId kRootBranch = 0;

// One conditional of the synthetic target: the gate's branch is covered when
// the payload bytes at `offset` equal `expected` and the parent gate is
// covered in the same execution. `class_hint` restricts which fuzzer class
// can synthesize the magic bytes deliberately (comparison-logging style
// instrumentation); absent means any class with solving power may.
struct Gate {
  BranchId id = 0;
  std::optional<BranchId> parent;  // absent = child of the root
  std::size_t offset = 0;
  std::vector<std::uint8_t> expected;
  bool crash = false;
  std::optional<FuzzerClass> class_hint;
};

// Synthetic program model: a forest of magic-byte gates standing in for a
// real instrumented binary.
class TargetSpec {
 public:
  TargetSpec() = default;
  TargetSpec(std::vector<Gate> gates, std::size_t max_input_len,
             std::vector<std::vector<std::uint8_t>> seeds = {}, std::string name = {});

  const std::vector<Gate>& gates() const { return gates_; }
  // Gates ordered parents-before-children.
  const std::vector<std::size_t>& topo_order() const { return topo_order_; }
  std::size_t max_input_len() const { return max_input_len_; }
  const std::vector<std::vector<std::uint8_t>>& seeds() const { return seeds_; }
  const std::string& name() const { return name_; }

  const Gate* gate_by_id(BranchId id) const;

 private:
  void finalize();

  std::vector<Gate> gates_;
  std::size_t max_input_len_ = 1024;
  std::vector<std::vector<std::uint8_t>> seeds_;
  std::string name_;
  std::vector<std::size_t> topo_order_;
  std::map<BranchId, std::size_t> index_by_id_;
};

struct ExecutionResult {
  std::vector<BranchId> branches;  // sorted, always contains kRootBranch
  bool crashed = false;
};

// Pure function of (spec, payload). Throws InputTooLong when the payload
// exceeds the target's max_input_len.
ExecutionResult run_target(const TargetSpec& spec, std::span<const std::uint8_t> payload);

// Consistency check used by test builds: root present and no covered gate
// without its covered parent.
bool gating_is_sound(const TargetSpec& spec, const ExecutionResult& result);

// Retained interesting inputs of one node. Every case contributed at least
// one new branch when it was admitted.
struct Corpus {
  std::vector<TestCase> cases;
  // Branch set each case covered at admission, parallel to `cases`; kept so
  // mutation can aim gate-solves at frontiers the parent case reaches.
  std::vector<std::vector<BranchId>> case_branches;
  CoverageMap coverage;
  std::uint64_t crashes_found = 0;        // distinct crashing payload ids
  std::set<std::uint64_t> crash_ids;
  std::vector<TestCase> new_since_ammuina;
};

// Gate-solving probability per mutation, in permille. Models the
// input-to-state power of the instrumentation classes; simulator knobs, not
// measured values.
std::uint32_t solve_permille(FuzzerClass c);

struct MutationContext {
  const TargetSpec& target;
  const Corpus& corpus;          // splice donor pool (non-empty)
  const CoverageMap& coverage;   // node's current coverage
  FuzzerClass fuzzer_class = FuzzerClass::kOther;
  std::size_t max_len = 1024;
};

// One mutation of `parent`: bit flip, byte overwrite, resize by <= 4 bytes,
// splice with another corpus case, or - with probability
// solve_permille(class) - a gate-solve that plants an uncovered gate's magic
// bytes at its offset. Output length never exceeds ctx.max_len.
std::vector<std::uint8_t> mutate(const TestCase& parent, std::span<const BranchId> parent_branches,
                                 const MutationContext& ctx, SplitMix64& rng);

// Campaign-wide tallies shared by all nodes: the union coverage, per-class
// unions, campaign-level crash dedup, first-cover ticks, and invariant
// violation counters.
struct RunTally {
  CoverageMap global_coverage;
  std::map<FuzzerClass, CoverageMap> class_coverage;
  std::set<std::uint64_t> crash_ids;
  std::optional<Tick> first_crash_tick;
  std::vector<std::map<BranchId, Tick>> first_cover_tick;  // per node
  std::uint64_t gating_violations = 0;
  std::uint64_t executions = 0;
  bool check_invariants = true;
};

// One simulated fuzzer instance: corpus, policy state, ammuina state, send
// queue, rng, and cost accounting. The campaign steps nodes in rank order.
class FuzzerNode {
 public:
  FuzzerNode(NodeId me, FuzzerClass cls, const CampaignConfig& cfg, const TargetSpec& target,
             Transport& transport, RunTally& tally, PolicyEngine policy);

  NodeId id() const { return me_; }
  FuzzerClass fuzzer_class() const { return class_; }
  Corpus& corpus() { return corpus_; }
  const Corpus& corpus() const { return corpus_; }
  SendQueue& send_queue() { return send_queue_; }
  PolicyEngine& policy() { return policy_; }
  AmmuinaState& ammuina() { return ammuina_; }
  Cost sync_cost() const { return sync_cost_; }
  void charge_sync_cost(Cost c) { sync_cost_ += c; }
  Tick stalled_until() const { return stalled_until_; }
  void stall_until(Tick t) { stalled_until_ = t; }

  PolicyContext context(Tick now) const;

  // Runs the target and performs the invariant checks test builds demand.
  ExecutionResult execute(std::span<const std::uint8_t> payload);

  // Coverage-novelty gate: admits the case, absorbs its branches, records
  // crashes (deduplicated by payload id), and dispatches it per the active
  // policy. Returns whether the case was interesting.
  bool save_if_interesting(const TestCase& tc, const ExecutionResult& result, Tick now);

  // Drains every deliverable message this tick: interesting inputs are
  // executed and fed through save_if_interesting (with utility feedback
  // under the dynamic policy), notices trim the interested set, ammuina
  // requests flag a pending round. Returns messages processed.
  int sync_fuzzers(Tick now);

  // One mutate -> run -> save iteration.
  void fuzz_iteration(Tick now);

  // Loads one seed input through the normal admission path.
  void import_seed(std::vector<std::uint8_t> payload, Tick now);

  // Periodic buffered sends (inter-master sync / baseline broadcast).
  void flush_policy(Tick now);

  // Up to ammuina_batch_cap cases discovered since the last round, newest
  // first; resets the delta window.
  std::vector<TestCase> take_ammuina_contribution();

  // Evaluates cases received in an ammuina round.
  void evaluate_ammuina(std::span<const TestCase> received, Tick round_tick);

 private:
  void dispatch(NodeId dest, Message msg, Tick now, Cost cost);

  NodeId me_;
  FuzzerClass class_;
  const CampaignConfig& cfg_;
  const TargetSpec& target_;
  Transport& transport_;
  RunTally& tally_;
  PolicyEngine policy_;
  SplitMix64 rng_;
  Corpus corpus_;
  SendQueue send_queue_;
  AmmuinaState ammuina_;
  Cost sync_cost_ = 0;
  Tick stalled_until_ = 0;
  std::size_t effective_max_len_;
};

}  // namespace dissim
