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

#include "dissim/core.hpp"

#include <utility>

#include "dissim/xxhash64.hpp"

namespace dissim {

const char* to_string(FuzzerClass c) {
  switch (c) {
    case FuzzerClass::kAsan: return "asan";
    case FuzzerClass::kCmplog: return "cmplog";
    case FuzzerClass::kLaf: return "laf";
    case FuzzerClass::kOther: return "other";
  }
  return "other";
}

std::optional<FuzzerClass> fuzzer_class_from_string(std::string_view s) {
  if (s == "asan") return FuzzerClass::kAsan;
  if (s == "cmplog") return FuzzerClass::kCmplog;
  if (s == "laf") return FuzzerClass::kLaf;
  if (s == "other") return FuzzerClass::kOther;
  return std::nullopt;
}

std::uint64_t hash_payload(std::span<const std::uint8_t> payload) { return xxh64(payload, 0); }

TestCase make_test_case(std::vector<std::uint8_t> payload, NodeId origin, Tick discovered_at) {
  TestCase tc;
  tc.id = hash_payload(payload);
  tc.payload = std::move(payload);
  tc.origin = origin;
  tc.discovered_at = discovered_at;
  return tc;
}

bool CoverageMap::covers_all(std::span<const BranchId> bs) const {
  for (BranchId b : bs) {
    if (!branches_.contains(b)) return false;
  }
  return true;
}

std::size_t CoverageMap::merge(std::span<const BranchId> bs) {
  std::size_t added = 0;
  for (BranchId b : bs) {
    if (branches_.insert(b).second) ++added;
  }
  return added;
}

std::size_t CoverageMap::merge(const CoverageMap& other) {
  std::size_t added = 0;
  for (BranchId b : other.branches_) {
    if (branches_.insert(b).second) ++added;
  }
  return added;
}

MessageKind kind_of(const Message& m) {
  return static_cast<MessageKind>(m.index());
}

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::kInterestingInput: return "interesting_input";
    case MessageKind::kLowUtilityNotice: return "low_utility_notice";
    case MessageKind::kAmmuinaRequest: return "ammuina_request";
    case MessageKind::kAmmuinaBatch: return "ammuina_batch";
  }
  return "unknown";
}

std::size_t wire_size(const Message& m) {
  if (const auto* ii = std::get_if<InterestingInput>(&m)) return ii->test_case.payload.size();
  if (const auto* batch = std::get_if<AmmuinaBatch>(&m)) {
    std::size_t total = 0;
    for (const TestCase& tc : batch->cases) total += tc.payload.size();
    return total;
  }
  return 0;
}

const char* to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kNone: return "none";
    case PolicyKind::kSelective: return "selective";
    case PolicyKind::kDynamic: return "dynamic";
    case PolicyKind::kHierarchical: return "hierarchical";
    case PolicyKind::kBaselinePeriodic: return "baseline-periodic";
  }
  return "none";
}

std::optional<PolicyKind> policy_from_string(std::string_view s) {
  if (s == "none") return PolicyKind::kNone;
  if (s == "selective") return PolicyKind::kSelective;
  if (s == "dynamic") return PolicyKind::kDynamic;
  if (s == "hierarchical") return PolicyKind::kHierarchical;
  if (s == "baseline-periodic") return PolicyKind::kBaselinePeriodic;
  return std::nullopt;
}

std::uint64_t ceil_mul(const Ratio& r, std::uint64_t scale) {
  if (r.num == 0 || scale == 0) return 0;
  // num * scale stays well inside 64 bits for the sizes this simulator uses
  // (payloads are a few KiB, per-byte latency a handful of ticks).
  const std::uint64_t prod = r.num * scale;
  return (prod + r.den - 1) / r.den;
}

std::vector<std::string> validate_config(const CampaignConfig& cfg) {
  std::vector<std::string> violations;
  auto bad = [&violations](std::string msg) { violations.push_back(std::move(msg)); };

  if (cfg.n_nodes < 1) bad("nodes must be at least 1");
  if (cfg.sample_interval <= 0) bad("sample_interval must be positive");
  if (cfg.total_ticks <= 0) bad("total_ticks must be positive");
  if (cfg.sample_interval > 0 && cfg.total_ticks % cfg.sample_interval != 0)
    bad("total_ticks not multiple of sample_interval");
  if (cfg.t_inc < 0) bad("t_inc must be nonnegative");
  if (cfg.t_time <= 0) bad("t_time must be positive");
  if (cfg.ammuina_cooldown < 0) bad("cooldown must be nonnegative");
  if (!cfg.class_assignment.empty() && cfg.class_assignment.size() != cfg.n_nodes)
    bad("classes length must equal nodes");
  if (cfg.execs_per_tick < 1) bad("execs_per_tick must be at least 1");
  if (cfg.max_input_len < 1) bad("max_input_len must be at least 1");
  if (cfg.base_latency < 0) bad("base_latency must be nonnegative");
  if (cfg.per_byte_latency.den == 0) bad("per_byte_latency denominator must be nonzero");
  if (cfg.policy == PolicyKind::kHierarchical && cfg.inter_master_period <= 0)
    bad("inter_master_period must be positive");
  if (cfg.policy == PolicyKind::kBaselinePeriodic && cfg.baseline_period <= 0)
    bad("baseline period must be positive");
  return violations;
}

}  // namespace dissim
