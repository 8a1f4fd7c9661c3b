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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dissim {

// Rank of a node inside the communication group, 0..N-1. N is fixed for the
// lifetime of a campaign.
using NodeId = std::uint32_t;

// Logical simulated time. One tick corresponds to one fuzz-execution slot per
// node; by convention 60 ticks stand in for 5 minutes of wall clock.
using Tick = std::int64_t;

using BranchId = std::uint32_t;
using Cost = std::uint64_t;

// Instrumentation flavor of a fuzzing node. Classes differ only in their
// gate-solving power (see fuzzer_model); the class mix of a campaign drives
// the hierarchical policy's cluster layout.
enum class FuzzerClass : std::uint8_t { kAsan = 0, kCmplog, kLaf, kOther };

inline constexpr FuzzerClass kAllFuzzerClasses[] = {FuzzerClass::kAsan, FuzzerClass::kCmplog,
                                                    FuzzerClass::kLaf, FuzzerClass::kOther};

const char* to_string(FuzzerClass c);
std::optional<FuzzerClass> fuzzer_class_from_string(std::string_view s);

// Content hash used for test-case identity and selective routing: XXH64 of
// the raw payload bytes with seed 0. Nothing but the payload participates.
std::uint64_t hash_payload(std::span<const std::uint8_t> payload);

// A candidate input. `id` is a pure function of the payload, so two nodes
// that discover the same bytes independently agree on the identity.
struct TestCase {
  std::vector<std::uint8_t> payload;
  NodeId origin = 0;
  Tick discovered_at = 0;
  std::uint64_t id = 0;
};

TestCase make_test_case(std::vector<std::uint8_t> payload, NodeId origin, Tick discovered_at);

// Insertion-only set of covered branch ids. Coverage never shrinks during a
// campaign.
class CoverageMap {
 public:
  bool contains(BranchId b) const { return branches_.contains(b); }

  // True when every branch in `bs` is already covered.
  bool covers_all(std::span<const BranchId> bs) const;

  // Inserts all of `bs`; returns how many were new.
  std::size_t merge(std::span<const BranchId> bs);
  std::size_t merge(const CoverageMap& other);

  std::size_t count() const { return branches_.size(); }
  const std::set<BranchId>& branches() const { return branches_; }

 private:
  std::set<BranchId> branches_;
};

// Inter-node traffic.
struct InterestingInput {
  TestCase test_case;
};

// "Stop sending to me": the sender of this notice no longer wants inputs
// from the receiver of the notice.
struct LowUtilityNotice {
  NodeId from = 0;
};

struct AmmuinaRequest {
  NodeId initiator = 0;
  Tick at_tick = 0;
};

struct AmmuinaBatch {
  std::vector<TestCase> cases;
};

using Message = std::variant<InterestingInput, LowUtilityNotice, AmmuinaRequest, AmmuinaBatch>;

enum class MessageKind : std::uint8_t {
  kInterestingInput = 0,
  kLowUtilityNotice,
  kAmmuinaRequest,
  kAmmuinaBatch,
};

MessageKind kind_of(const Message& m);
const char* to_string(MessageKind k);

// Bytes a message occupies on the wire for latency purposes: the payload
// bytes it carries. Control messages are treated as free.
std::size_t wire_size(const Message& m);

enum class PolicyKind : std::uint8_t {
  kNone = 0,
  kSelective,
  kDynamic,
  kHierarchical,
  kBaselinePeriodic,
};

const char* to_string(PolicyKind p);
std::optional<PolicyKind> policy_from_string(std::string_view s);

// Exact nonnegative rational, used for the per-byte latency so that delivery
// ticks never depend on floating-point rounding.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  bool is_zero() const { return num == 0; }
  bool operator==(const Ratio&) const = default;
};

// ceil(num * scale / den)
std::uint64_t ceil_mul(const Ratio& r, std::uint64_t scale);

struct CampaignConfig {
  std::uint32_t n_nodes = 1;
  PolicyKind policy = PolicyKind::kNone;

  bool ammuina_enabled = false;
  std::int64_t t_inc = 3;        // branch-count increment regarded as progress
  Tick t_time = 600;             // stagnation window before a round may trigger
  Tick ammuina_cooldown = 300;   // minimum spacing between rounds
  std::uint32_t ammuina_batch_cap = 16;

  std::int64_t u_min = -5;  // utility score below which a receiver objects

  Tick inter_master_period = 120;
  Tick baseline_period = 120;

  std::uint64_t seed = 1;
  Tick total_ticks = 600;
  Tick sample_interval = 60;
  std::uint32_t execs_per_tick = 1;
  std::vector<FuzzerClass> class_assignment;  // one entry per node

  Tick base_latency = 1;
  Ratio per_byte_latency{0, 1};

  Cost c_send = 1;
  Cost c_recv = 1;
  Cost c_file = 10;

  std::size_t max_input_len = 1024;
  bool log_messages = false;
};

// Returns every invariant violation as a human-readable line; empty means the
// config is usable. Never mutates the input.
std::vector<std::string> validate_config(const CampaignConfig& cfg);

}  // namespace dissim
