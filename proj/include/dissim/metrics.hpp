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
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dissim/campaign.hpp"
#include "dissim/core.hpp"

namespace dissim {

struct EmptySeries : std::runtime_error {
  EmptySeries() : std::runtime_error("coverage series is empty") {}
};

struct MixedTargets : std::runtime_error {
  MixedTargets() : std::runtime_error("reports were produced on different targets") {}
};

// Exact coverage fraction (e.g. 9/10 for the 90% target). Thresholds are
// computed as ceil(num * best / den) so odd bests stay unambiguous and no
// floating-point rounding sneaks in.
struct Fraction {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  // Parses "0.75", ".5", "1", "3/4".
  static std::optional<Fraction> parse(std::string_view s);

  std::uint64_t threshold(std::uint64_t best) const {
    if (num == 0 || best == 0) return 0;
    return (num * best + den - 1) / den;
  }

  std::string str() const;
  bool operator==(const Fraction&) const = default;
};

// Earliest tick at which the series reaches fraction*best, or nullopt
// (rendered "---") when it never does. The series must be tick-sorted and
// nonempty.
std::optional<Tick> time_to_target(std::span<const SeriesPoint> series, std::uint64_t best,
                                   Fraction fraction);

// Highest final aggregate coverage across reports on one target: the shared
// denominator for the percentage targets.
std::uint64_t best_coverage(std::span<const CampaignReport> reports);

struct CrashStats {
  std::uint64_t max_crashes = 0;
  std::optional<Tick> first_crash_tick;
};

CrashStats crash_stats(const CampaignReport& report);

// One table: rows of per-policy time-to-target against a shared best. Scope
// is a fuzzer class name, or "all" for the campaign-union table.
struct CoverageTable {
  std::string scope;
  std::uint64_t best = 0;
  std::vector<Fraction> fractions;
  struct Row {
    std::string label;
    std::vector<std::optional<Tick>> cells;
  };
  std::vector<Row> rows;
};

// Per-class tables (class-specific bests) plus the campaign-union table
// (global best). All reports must share one target id.
std::vector<CoverageTable> render_tables(std::span<const CampaignReport> reports,
                                         std::span<const Fraction> fractions);

std::string format_table_text(const CoverageTable& table);

// File renderings. CSV is ASCII, comma-separated, LF line endings, with a
// mandatory header row.
std::string samples_to_csv(const CampaignReport& report);
std::string message_log_to_csv(const CampaignReport& report);

}  // namespace dissim
