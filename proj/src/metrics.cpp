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

#include "dissim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace dissim {

std::optional<Fraction> Fraction::parse(std::string_view s) {
  if (s.empty()) return std::nullopt;

  auto parse_u64 = [](std::string_view text) -> std::optional<std::uint64_t> {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return v;
  };

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = parse_u64(s.substr(0, slash));
    auto den = parse_u64(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    return Fraction{*num, *den};
  }

  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = s.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) return std::nullopt;
    std::uint64_t w = 0;
    if (!whole.empty()) {
      auto parsed = parse_u64(whole);
      if (!parsed) return std::nullopt;
      w = *parsed;
    }
    auto f = parse_u64(frac);
    if (!f) return std::nullopt;
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    return Fraction{w * den + *f, den};
  }

  auto whole = parse_u64(s);
  if (!whole) return std::nullopt;
  return Fraction{*whole, 1};
}

std::string Fraction::str() const {
  if (den == 1) return std::to_string(num);
  // Render the familiar decimals nicely, everything else as num/den.
  for (std::uint64_t scale : {10ULL, 100ULL, 1000ULL}) {
    if (scale % den == 0) {
      const std::uint64_t scaled = num * (scale / den);
      std::string digits = std::to_string(scaled);
      std::string width = std::to_string(scale).substr(1);  // e.g. "00" for 100
      while (digits.size() < width.size()) digits.insert(digits.begin(), '0');
      std::string whole = digits.size() > width.size()
                              ? digits.substr(0, digits.size() - width.size())
                              : std::string("0");
      std::string frac = digits.substr(digits.size() - width.size());
      while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
      return whole + "." + frac;
    }
  }
  return std::to_string(num) + "/" + std::to_string(den);
}

std::optional<Tick> time_to_target(std::span<const SeriesPoint> series, std::uint64_t best,
                                   Fraction fraction) {
  if (series.empty()) throw EmptySeries();
  const std::uint64_t target = fraction.threshold(best);
  for (const SeriesPoint& p : series) {
    if (p.coverage >= target) return p.tick;
  }
  return std::nullopt;
}

std::uint64_t best_coverage(std::span<const CampaignReport> reports) {
  std::uint64_t best = 0;
  for (const CampaignReport& r : reports) best = std::max(best, r.final_coverage);
  return best;
}

CrashStats crash_stats(const CampaignReport& report) {
  return {report.max_crashes, report.first_crash_tick};
}

std::vector<CoverageTable> render_tables(std::span<const CampaignReport> reports,
                                         std::span<const Fraction> fractions) {
  if (reports.empty()) return {};
  for (const CampaignReport& r : reports) {
    if (r.target_id != reports.front().target_id) throw MixedTargets();
  }

  std::vector<CoverageTable> tables;

  // Per-class tables, against class-specific bests.
  std::set<FuzzerClass> classes;
  for (const CampaignReport& r : reports) {
    for (const auto& [cls, series] : r.class_coverage) classes.insert(cls);
  }
  for (FuzzerClass cls : classes) {
    CoverageTable table;
    table.scope = to_string(cls);
    table.fractions.assign(fractions.begin(), fractions.end());
    for (const CampaignReport& r : reports) {
      auto it = r.class_coverage.find(cls);
      if (it == r.class_coverage.end() || it->second.empty()) continue;
      table.best = std::max(table.best, it->second.back().coverage);
    }
    for (const CampaignReport& r : reports) {
      auto it = r.class_coverage.find(cls);
      if (it == r.class_coverage.end() || it->second.empty()) continue;
      CoverageTable::Row row;
      row.label = r.label;
      for (const Fraction& f : fractions) {
        row.cells.push_back(time_to_target(it->second, table.best, f));
      }
      table.rows.push_back(std::move(row));
    }
    tables.push_back(std::move(table));
  }

  // Campaign-union table against the global best.
  CoverageTable all;
  all.scope = "all";
  all.fractions.assign(fractions.begin(), fractions.end());
  all.best = best_coverage(reports);
  for (const CampaignReport& r : reports) {
    CoverageTable::Row row;
    row.label = r.label;
    for (const Fraction& f : fractions) {
      row.cells.push_back(time_to_target(r.aggregate_coverage, all.best, f));
    }
    all.rows.push_back(std::move(row));
  }
  tables.push_back(std::move(all));
  return tables;
}

std::string format_table_text(const CoverageTable& table) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"policy"};
  for (const Fraction& f : table.fractions) header.push_back(f.str());
  cells.push_back(header);
  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.label};
    for (const auto& cell : row.cells) {
      line.push_back(cell ? std::to_string(*cell) : std::string("---"));
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }

  std::ostringstream os;
  os << "# scope: " << table.scope << " (best coverage " << table.best << ")\n";
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) os << "  ";
      os << line[i];
      for (std::size_t pad = line[i].size(); pad < width[i]; ++pad) os << ' ';
    }
    os << "\n";
  }
  return os.str();
}

std::string samples_to_csv(const CampaignReport& report) {
  std::ostringstream os;
  os << "tick,node,coverage,corpus_size,sync_cost,crashes\n";
  for (const MetricSample& s : report.samples) {
    os << s.tick << ',' << s.node << ',' << s.coverage_count << ',' << s.corpus_size << ','
       << s.sync_cost << ',' << s.crashes << '\n';
  }
  return os.str();
}

std::string message_log_to_csv(const CampaignReport& report) {
  std::ostringstream os;
  os << "tick,src,dst,kind\n";
  for (const MessageLogEntry& e : report.message_log) {
    os << e.tick << ',' << e.src << ',' << e.dst << ',' << to_string(e.kind) << '\n';
  }
  return os.str();
}

}  // namespace dissim
