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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dissim/campaign.hpp"
#include "dissim/core.hpp"
#include "dissim/fuzzer_model.hpp"
#include "dissim/metrics.hpp"

namespace dissim {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

std::string hex_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> hex_decode(std::string_view hex);  // throws ParseError

// --- campaign config -------------------------------------------------------
//
// Document shape (all keys optional except `nodes`):
//   { "nodes": 4, "policy": "selective", "classes": ["asan", ...],
//     "seed": 1, "total_ticks": 600, "sample_interval": 60,
//     "execs_per_tick": 1,
//     "ammuina": {"enabled": false, "t_inc": 3, "t_time": 600,
//                 "cooldown": 300, "batch_cap": 16},
//     "dynamic": {"u_min": -5},
//     "hierarchical": {"inter_master_period": 120},
//     "baseline": {"period": 120},
//     "transport": {"base_latency": 1, "per_byte_latency": 0},
//     "costs": {"c_send": 1, "c_recv": 1, "c_file": 10},
//     "max_input_len": 1024, "log_messages": false }
//
// per_byte_latency accepts an integer or an exact rational as [num, den].
// Absent ammuina windows default relative to the sample interval (t_time =
// 10 intervals, cooldown = 5). Unknown keys are rejected.
CampaignConfig config_from_json(const nlohmann::json& j);
CampaignConfig parse_config(std::string_view text);
nlohmann::json config_to_json(const CampaignConfig& cfg);

// --- target spec -------------------------------------------------------------
//
// { "name": "...", "max_input_len": 64,
//   "gates": [{"id": 1, "parent": null, "offset": 0, "expected_hex": "46",
//              "crash": false, "class_hint": "cmplog"}],
//   "seeds": ["00000000"] }
TargetSpec target_from_json(const nlohmann::json& j);
TargetSpec parse_target(std::string_view text);
nlohmann::json target_to_json(const TargetSpec& spec);

// Content identity of a target: hash of its canonical serialized form.
std::uint64_t target_content_id(const TargetSpec& spec);

// --- generated targets -------------------------------------------------------
//
// Full fanout-ary gate forest of the requested depth. Gates at tree level L
// occupy payload bytes [(L-1)*magic_len, L*magic_len); siblings at one
// offset carry distinct magic, so they behave like exclusive switch cases.
// crash_count gates of the deepest level are crash leaves.
struct GenTargetParams {
  std::uint32_t depth = 1;
  std::uint32_t fanout = 1;
  std::uint32_t magic_len = 4;
  std::uint32_t crash_count = 0;
  std::uint64_t seed = 1;
  std::string name;
};

// Throws std::invalid_argument on a bad shape.
TargetSpec gen_target(const GenTargetParams& params);

// --- reports ---------------------------------------------------------------
nlohmann::json report_to_json(const CampaignReport& report, const CampaignConfig& cfg);
// Restores the fields cmd_compare needs (label, target id, series, finals);
// per-tick samples live in the CSV, not here.
CampaignReport report_from_json(const nlohmann::json& j);

nlohmann::json tables_to_json(std::span<const CoverageTable> tables);

}  // namespace dissim
