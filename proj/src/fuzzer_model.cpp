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

#include "dissim/fuzzer_model.hpp"

#include <algorithm>
#include <cassert>
#include <utility>

namespace dissim {

TargetSpec::TargetSpec(std::vector<Gate> gates, std::size_t max_input_len,
                       std::vector<std::vector<std::uint8_t>> seeds, std::string name)
    : gates_(std::move(gates)),
      max_input_len_(max_input_len),
      seeds_(std::move(seeds)),
      name_(std::move(name)) {
  finalize();
}

void TargetSpec::finalize() {
  index_by_id_.clear();
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    const Gate& g = gates_[i];
    if (g.id == kRootBranch) throw std::invalid_argument("gate id 0 is reserved for the root");
    if (!index_by_id_.emplace(g.id, i).second)
      throw std::invalid_argument("duplicate gate id " + std::to_string(g.id));
    if (g.offset + g.expected.size() > max_input_len_)
      throw std::invalid_argument("gate " + std::to_string(g.id) + " exceeds max_input_len");
  }

  // Parents-before-children order; also rejects missing parents and cycles.
  topo_order_.clear();
  topo_order_.reserve(gates_.size());
  std::set<BranchId> placed;
  std::size_t remaining = gates_.size();
  while (remaining > 0) {
    bool progressed = false;
    for (std::size_t i = 0; i < gates_.size(); ++i) {
      const Gate& g = gates_[i];
      if (placed.contains(g.id)) continue;
      if (g.parent && g.parent != kRootBranch && !placed.contains(*g.parent)) {
        if (!index_by_id_.contains(*g.parent))
          throw std::invalid_argument("gate " + std::to_string(g.id) + " has unknown parent");
        continue;
      }
      topo_order_.push_back(i);
      placed.insert(g.id);
      --remaining;
      progressed = true;
    }
    if (!progressed) throw std::invalid_argument("gate parents form a cycle");
  }
}

const Gate* TargetSpec::gate_by_id(BranchId id) const {
  auto it = index_by_id_.find(id);
  return it == index_by_id_.end() ? nullptr : &gates_[it->second];
}

namespace {

bool payload_matches(std::span<const std::uint8_t> payload, const Gate& g) {
  if (g.offset + g.expected.size() > payload.size()) return false;
  return std::equal(g.expected.begin(), g.expected.end(), payload.begin() + g.offset);
}

}  // namespace

ExecutionResult run_target(const TargetSpec& spec, std::span<const std::uint8_t> payload) {
  if (payload.size() > spec.max_input_len()) throw InputTooLong();

  ExecutionResult result;
  std::set<BranchId> covered{kRootBranch};
  for (std::size_t idx : spec.topo_order()) {
    const Gate& g = spec.gates()[idx];
    const BranchId parent = g.parent.value_or(kRootBranch);
    if (!covered.contains(parent)) continue;
    if (!payload_matches(payload, g)) continue;
    covered.insert(g.id);
    if (g.crash) result.crashed = true;
  }
  result.branches.assign(covered.begin(), covered.end());
  return result;
}

bool gating_is_sound(const TargetSpec& spec, const ExecutionResult& result) {
  std::set<BranchId> covered(result.branches.begin(), result.branches.end());
  if (!covered.contains(kRootBranch)) return false;
  for (BranchId b : result.branches) {
    if (b == kRootBranch) continue;
    const Gate* g = spec.gate_by_id(b);
    if (g == nullptr) return false;
    if (!covered.contains(g->parent.value_or(kRootBranch))) return false;
  }
  return true;
}

std::uint32_t solve_permille(FuzzerClass c) {
  switch (c) {
    case FuzzerClass::kAsan: return 0;
    case FuzzerClass::kCmplog: return 50;
    case FuzzerClass::kLaf: return 30;
    case FuzzerClass::kOther: return 10;
  }
  return 0;
}

namespace {

// Gates worth aiming a solve at: uncovered locally, reachable from the
// parent case (its parent branch executed), and hint-compatible.
std::vector<const Gate*> solve_candidates(const MutationContext& ctx,
                                          std::span<const BranchId> parent_branches) {
  std::set<BranchId> reachable(parent_branches.begin(), parent_branches.end());
  std::vector<const Gate*> out;
  for (const Gate& g : ctx.target.gates()) {
    if (ctx.coverage.contains(g.id)) continue;
    if (!reachable.contains(g.parent.value_or(kRootBranch))) continue;
    if (g.class_hint && *g.class_hint != ctx.fuzzer_class) continue;
    if (g.offset + g.expected.size() > ctx.max_len) continue;
    out.push_back(&g);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> mutate(const TestCase& parent, std::span<const BranchId> parent_branches,
                                 const MutationContext& ctx, SplitMix64& rng) {
  std::vector<std::uint8_t> out = parent.payload;

  if (rng.chance_permille(solve_permille(ctx.fuzzer_class))) {
    auto candidates = solve_candidates(ctx, parent_branches);
    if (!candidates.empty()) {
      const Gate& g = *candidates[rng.next_below(candidates.size())];
      if (out.size() < g.offset + g.expected.size()) out.resize(g.offset + g.expected.size(), 0);
      std::copy(g.expected.begin(), g.expected.end(), out.begin() + g.offset);
      return out;
    }
  }

  switch (rng.next_below(4)) {
    case 0: {  // bit flip
      if (out.empty()) {
        out.push_back(rng.next_byte());
        break;
      }
      const std::size_t pos = rng.next_below(out.size());
      out[pos] ^= static_cast<std::uint8_t>(1u << rng.next_below(8));
      break;
    }
    case 1: {  // random byte overwrite
      if (out.empty()) {
        out.push_back(rng.next_byte());
        break;
      }
      out[rng.next_below(out.size())] = rng.next_byte();
      break;
    }
    case 2: {  // truncate or extend by up to 4 bytes
      const std::uint64_t delta = 1 + rng.next_below(4);
      if (rng.next_below(2) == 0) {
        const std::size_t cut = std::min<std::size_t>(delta, out.size());
        out.resize(out.size() - cut);
      } else {
        for (std::uint64_t i = 0; i < delta && out.size() < ctx.max_len; ++i)
          out.push_back(rng.next_byte());
      }
      break;
    }
    default: {  // splice with another corpus case
      const auto& cases = ctx.corpus.cases;
      if (cases.empty()) break;
      const TestCase& donor = cases[rng.next_below(cases.size())];
      if (donor.payload.empty() || out.empty()) {
        out.insert(out.end(), donor.payload.begin(), donor.payload.end());
      } else {
        const std::size_t keep = 1 + rng.next_below(out.size());
        const std::size_t from = rng.next_below(donor.payload.size());
        out.resize(keep);
        out.insert(out.end(), donor.payload.begin() + from, donor.payload.end());
      }
      if (out.size() > ctx.max_len) out.resize(ctx.max_len);
      break;
    }
  }
  if (out.size() > ctx.max_len) out.resize(ctx.max_len);
  return out;
}

FuzzerNode::FuzzerNode(NodeId me, FuzzerClass cls, const CampaignConfig& cfg,
                       const TargetSpec& target, Transport& transport, RunTally& tally,
                       PolicyEngine policy)
    : me_(me),
      class_(cls),
      cfg_(cfg),
      target_(target),
      transport_(transport),
      tally_(tally),
      policy_(std::move(policy)),
      rng_(SplitMix64::for_node(cfg.seed, me)),
      effective_max_len_(std::min(cfg.max_input_len, target.max_input_len())) {}

PolicyContext FuzzerNode::context(Tick now) const {
  return PolicyContext{me_, cfg_.n_nodes, class_, std::span(cfg_.class_assignment), now};
}

ExecutionResult FuzzerNode::execute(std::span<const std::uint8_t> payload) {
  ExecutionResult result = run_target(target_, payload);
  ++tally_.executions;
  if (tally_.check_invariants && !gating_is_sound(target_, result)) ++tally_.gating_violations;
  return result;
}

void FuzzerNode::dispatch(NodeId dest, Message msg, Tick now, Cost cost) {
  send_queue_.push(transport_.send_async(me_, dest, std::move(msg), now));
  sync_cost_ += cost;
}

bool FuzzerNode::save_if_interesting(const TestCase& tc, const ExecutionResult& result, Tick now) {
  if (result.crashed && corpus_.crash_ids.insert(tc.id).second) {
    ++corpus_.crashes_found;
    tally_.crash_ids.insert(tc.id);
    if (!tally_.first_crash_tick || now < *tally_.first_crash_tick) tally_.first_crash_tick = now;
  }

  const bool interesting = !corpus_.coverage.covers_all(result.branches);
  if (!interesting) return false;

  for (BranchId b : result.branches) {
    if (!corpus_.coverage.contains(b)) tally_.first_cover_tick[me_].try_emplace(b, now);
  }
  corpus_.coverage.merge(result.branches);
  tally_.global_coverage.merge(result.branches);
  tally_.class_coverage[class_].merge(result.branches);

  corpus_.cases.push_back(tc);
  corpus_.case_branches.push_back(result.branches);
  corpus_.new_since_ammuina.push_back(tc);

  for (NodeId dest : policy_.on_interesting(tc, context(now))) {
    dispatch(dest, Message{InterestingInput{tc}}, now, cfg_.c_send);
  }
  return true;
}

int FuzzerNode::sync_fuzzers(Tick now) {
  int processed = 0;
  while (auto src = transport_.probe(me_, now)) {
    Message msg = transport_.receive(me_, *src, now);
    sync_cost_ += cfg_.c_recv;
    ++processed;

    if (auto* ii = std::get_if<InterestingInput>(&msg)) {
      const ExecutionResult result = execute(ii->test_case.payload);
      const bool interesting = save_if_interesting(ii->test_case, result, now);
      if (policy_.wants_utility_feedback()) {
        if (auto notice = record_evaluation(policy_.directory(), me_, *src, interesting)) {
          dispatch(*src, std::move(*notice), now, cfg_.c_send);
        }
      }
    } else if (auto* notice = std::get_if<LowUtilityNotice>(&msg)) {
      handle_low_utility(policy_.directory(), notice->from);
    } else if (std::holds_alternative<AmmuinaRequest>(msg)) {
      ammuina_.pending_request = true;
    } else if (auto* batch = std::get_if<AmmuinaBatch>(&msg)) {
      // Not produced by the in-memory collective, but a point-to-point batch
      // is still meaningful traffic: evaluate its cases.
      for (const TestCase& tc : batch->cases) {
        save_if_interesting(tc, execute(tc.payload), now);
      }
    }
  }
  return processed;
}

void FuzzerNode::fuzz_iteration(Tick now) {
  assert(!corpus_.cases.empty());
  const std::size_t pick = rng_.next_below(corpus_.cases.size());
  const MutationContext mutation_ctx{target_, corpus_, corpus_.coverage, class_,
                                     effective_max_len_};
  std::vector<std::uint8_t> payload =
      mutate(corpus_.cases[pick], corpus_.case_branches[pick], mutation_ctx, rng_);
  TestCase tc = make_test_case(std::move(payload), me_, now);
  const ExecutionResult result = execute(tc.payload);
  save_if_interesting(tc, result, now);
}

void FuzzerNode::import_seed(std::vector<std::uint8_t> payload, Tick now) {
  if (payload.size() > effective_max_len_) payload.resize(effective_max_len_);
  TestCase tc = make_test_case(std::move(payload), me_, now);
  const ExecutionResult result = execute(tc.payload);
  save_if_interesting(tc, result, now);
}

void FuzzerNode::flush_policy(Tick now) {
  for (auto& send : policy_.flush(context(now), now)) {
    dispatch(send.dest, Message{InterestingInput{std::move(send.test_case)}}, now,
             send.charge_as_file ? cfg_.c_file : cfg_.c_send);
  }
}

std::vector<TestCase> FuzzerNode::take_ammuina_contribution() {
  std::vector<TestCase> contribution;
  const std::size_t cap = cfg_.ammuina_batch_cap;
  auto& fresh = corpus_.new_since_ammuina;
  for (auto it = fresh.rbegin(); it != fresh.rend() && contribution.size() < cap; ++it) {
    contribution.push_back(*it);
  }
  fresh.clear();
  return contribution;
}

void FuzzerNode::evaluate_ammuina(std::span<const TestCase> received, Tick round_tick) {
  for (const TestCase& tc : received) {
    sync_cost_ += cfg_.c_recv;
    const ExecutionResult result = execute(tc.payload);
    save_if_interesting(tc, result, round_tick);
  }
}

}  // namespace dissim
