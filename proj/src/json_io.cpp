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

#include "dissim/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <utility>

#include "dissim/rng.hpp"
#include "dissim/xxhash64.hpp"

namespace dissim {

namespace {

using nlohmann::json;

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void require_keys(const json& j, std::initializer_list<std::string_view> allowed,
                  const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ParseError(std::string("unknown key \"") + key + "\" in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("bad value for \"") + key + "\"");
  }
}

Ratio ratio_from_json(const json& v, const char* key) {
  if (v.is_number_unsigned() || v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n < 0) throw ParseError(std::string(key) + " must be nonnegative");
    return Ratio{static_cast<std::uint64_t>(n), 1};
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number_unsigned() && v[1].is_number_unsigned()) {
    Ratio r{v[0].get<std::uint64_t>(), v[1].get<std::uint64_t>()};
    if (r.den == 0) throw ParseError(std::string(key) + " denominator must be nonzero");
    return r;
  }
  throw ParseError(std::string(key) + " must be an integer or [num, den]");
}

json ratio_to_json(const Ratio& r) {
  if (r.den == 1) return json(r.num);
  return json::array({r.num, r.den});
}

json series_to_json(const std::vector<SeriesPoint>& series) {
  json arr = json::array();
  for (const SeriesPoint& p : series) arr.push_back(json::array({p.tick, p.coverage}));
  return arr;
}

std::vector<SeriesPoint> series_from_json(const json& arr) {
  std::vector<SeriesPoint> series;
  for (const auto& p : arr) {
    series.push_back({p.at(0).get<Tick>(), p.at(1).get<std::uint64_t>()});
  }
  return series;
}

}  // namespace

std::string hex_encode(std::span<const std::uint8_t> bytes) {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_nibble(hex[i]);
    const int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

CampaignConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  require_keys(j,
               {"nodes", "policy", "classes", "seed", "total_ticks", "sample_interval",
                "execs_per_tick", "ammuina", "dynamic", "hierarchical", "baseline", "transport",
                "costs", "max_input_len", "log_messages"},
               "config");

  CampaignConfig cfg;
  if (!j.contains("nodes")) throw ParseError("config requires \"nodes\"");
  cfg.n_nodes = j.at("nodes").get<std::uint32_t>();

  if (j.contains("policy")) {
    const auto s = j.at("policy").get<std::string>();
    auto p = policy_from_string(s);
    if (!p) throw ParseError("unknown policy \"" + s + "\"");
    cfg.policy = *p;
  }

  if (j.contains("classes")) {
    for (const auto& entry : j.at("classes")) {
      const auto s = entry.get<std::string>();
      auto c = fuzzer_class_from_string(s);
      if (!c) throw ParseError("unknown fuzzer class \"" + s + "\"");
      cfg.class_assignment.push_back(*c);
    }
  }

  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.total_ticks = get_or<Tick>(j, "total_ticks", cfg.total_ticks);
  cfg.sample_interval = get_or<Tick>(j, "sample_interval", cfg.sample_interval);
  cfg.execs_per_tick = get_or<std::uint32_t>(j, "execs_per_tick", cfg.execs_per_tick);
  cfg.max_input_len = get_or<std::size_t>(j, "max_input_len", cfg.max_input_len);
  cfg.log_messages = get_or<bool>(j, "log_messages", cfg.log_messages);

  // Window defaults follow the sample cadence unless given explicitly.
  cfg.t_time = 10 * cfg.sample_interval;
  cfg.ammuina_cooldown = 5 * cfg.sample_interval;

  if (j.contains("ammuina")) {
    const json& a = j.at("ammuina");
    require_keys(a, {"enabled", "t_inc", "t_time", "cooldown", "batch_cap"}, "ammuina");
    cfg.ammuina_enabled = get_or<bool>(a, "enabled", cfg.ammuina_enabled);
    cfg.t_inc = get_or<std::int64_t>(a, "t_inc", cfg.t_inc);
    cfg.t_time = get_or<Tick>(a, "t_time", cfg.t_time);
    cfg.ammuina_cooldown = get_or<Tick>(a, "cooldown", cfg.ammuina_cooldown);
    cfg.ammuina_batch_cap = get_or<std::uint32_t>(a, "batch_cap", cfg.ammuina_batch_cap);
  }
  if (j.contains("dynamic")) {
    const json& d = j.at("dynamic");
    require_keys(d, {"u_min"}, "dynamic");
    cfg.u_min = get_or<std::int64_t>(d, "u_min", cfg.u_min);
  }
  if (j.contains("hierarchical")) {
    const json& h = j.at("hierarchical");
    require_keys(h, {"inter_master_period"}, "hierarchical");
    cfg.inter_master_period = get_or<Tick>(h, "inter_master_period", cfg.inter_master_period);
  }
  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    require_keys(b, {"period"}, "baseline");
    cfg.baseline_period = get_or<Tick>(b, "period", cfg.baseline_period);
  }
  if (j.contains("transport")) {
    const json& t = j.at("transport");
    require_keys(t, {"base_latency", "per_byte_latency"}, "transport");
    cfg.base_latency = get_or<Tick>(t, "base_latency", cfg.base_latency);
    if (t.contains("per_byte_latency"))
      cfg.per_byte_latency = ratio_from_json(t.at("per_byte_latency"), "per_byte_latency");
  }
  if (j.contains("costs")) {
    const json& c = j.at("costs");
    require_keys(c, {"c_send", "c_recv", "c_file"}, "costs");
    cfg.c_send = get_or<Cost>(c, "c_send", cfg.c_send);
    cfg.c_recv = get_or<Cost>(c, "c_recv", cfg.c_recv);
    cfg.c_file = get_or<Cost>(c, "c_file", cfg.c_file);
  }
  return cfg;
}

CampaignConfig parse_config(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("config is not valid JSON");
  return config_from_json(j);
}

json config_to_json(const CampaignConfig& cfg) {
  json classes = json::array();
  for (FuzzerClass c : cfg.class_assignment) classes.push_back(to_string(c));
  return json{
      {"nodes", cfg.n_nodes},
      {"policy", to_string(cfg.policy)},
      {"classes", classes},
      {"seed", cfg.seed},
      {"total_ticks", cfg.total_ticks},
      {"sample_interval", cfg.sample_interval},
      {"execs_per_tick", cfg.execs_per_tick},
      {"ammuina",
       {{"enabled", cfg.ammuina_enabled},
        {"t_inc", cfg.t_inc},
        {"t_time", cfg.t_time},
        {"cooldown", cfg.ammuina_cooldown},
        {"batch_cap", cfg.ammuina_batch_cap}}},
      {"dynamic", {{"u_min", cfg.u_min}}},
      {"hierarchical", {{"inter_master_period", cfg.inter_master_period}}},
      {"baseline", {{"period", cfg.baseline_period}}},
      {"transport",
       {{"base_latency", cfg.base_latency},
        {"per_byte_latency", ratio_to_json(cfg.per_byte_latency)}}},
      {"costs", {{"c_send", cfg.c_send}, {"c_recv", cfg.c_recv}, {"c_file", cfg.c_file}}},
      {"max_input_len", cfg.max_input_len},
      {"log_messages", cfg.log_messages},
  };
}

TargetSpec target_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("target must be a JSON object");
  require_keys(j, {"name", "max_input_len", "gates", "seeds"}, "target");
  if (!j.contains("gates")) throw ParseError("target requires \"gates\"");

  std::vector<Gate> gates;
  for (const auto& gj : j.at("gates")) {
    require_keys(gj, {"id", "parent", "offset", "expected_hex", "crash", "class_hint"}, "gate");
    Gate g;
    g.id = gj.at("id").get<BranchId>();
    if (gj.contains("parent") && !gj.at("parent").is_null())
      g.parent = gj.at("parent").get<BranchId>();
    g.offset = gj.at("offset").get<std::size_t>();
    g.expected = hex_decode(gj.at("expected_hex").get<std::string>());
    g.crash = get_or<bool>(gj, "crash", false);
    if (gj.contains("class_hint") && !gj.at("class_hint").is_null()) {
      const auto s = gj.at("class_hint").get<std::string>();
      auto c = fuzzer_class_from_string(s);
      if (!c) throw ParseError("unknown class_hint \"" + s + "\"");
      g.class_hint = *c;
    }
    gates.push_back(std::move(g));
  }

  std::vector<std::vector<std::uint8_t>> seeds;
  if (j.contains("seeds")) {
    for (const auto& s : j.at("seeds")) seeds.push_back(hex_decode(s.get<std::string>()));
  }

  const auto max_len = get_or<std::size_t>(j, "max_input_len", 1024);
  const auto name = get_or<std::string>(j, "name", "");
  try {
    return TargetSpec(std::move(gates), max_len, std::move(seeds), name);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

TargetSpec parse_target(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("target is not valid JSON");
  return target_from_json(j);
}

json target_to_json(const TargetSpec& spec) {
  json gates = json::array();
  for (const Gate& g : spec.gates()) {
    json gj{
        {"id", g.id},
        {"parent", g.parent ? json(*g.parent) : json(nullptr)},
        {"offset", g.offset},
        {"expected_hex", hex_encode(g.expected)},
        {"crash", g.crash},
    };
    if (g.class_hint) gj["class_hint"] = to_string(*g.class_hint);
    gates.push_back(std::move(gj));
  }
  json seeds = json::array();
  for (const auto& s : spec.seeds()) seeds.push_back(hex_encode(s));
  return json{
      {"name", spec.name()},
      {"max_input_len", spec.max_input_len()},
      {"gates", gates},
      {"seeds", seeds},
  };
}

std::uint64_t target_content_id(const TargetSpec& spec) {
  const std::string canonical = target_to_json(spec).dump();
  return xxh64(std::span(reinterpret_cast<const std::uint8_t*>(canonical.data()),
                         canonical.size()));
}

TargetSpec gen_target(const GenTargetParams& params) {
  if (params.depth < 1) throw std::invalid_argument("depth must be at least 1");
  if (params.fanout < 1) throw std::invalid_argument("fanout must be at least 1");
  if (params.magic_len < 1) throw std::invalid_argument("magic_len must be at least 1");

  std::uint64_t gate_count = 0;
  std::uint64_t level_size = 1;
  for (std::uint32_t level = 1; level <= params.depth; ++level) {
    level_size *= params.fanout;
    gate_count += level_size;
    if (gate_count > 100000) throw std::invalid_argument("shape too large (over 100000 gates)");
  }
  if (params.crash_count > level_size)
    throw std::invalid_argument("crash_count exceeds gates in the deepest level");

  SplitMix64 rng(params.seed);
  std::vector<Gate> gates;
  gates.reserve(gate_count);

  BranchId next_id = 1;
  std::vector<BranchId> previous_level;  // empty = root level
  for (std::uint32_t level = 1; level <= params.depth; ++level) {
    std::vector<BranchId> current_level;
    std::set<std::vector<std::uint8_t>> used_magic;
    const std::size_t parents = previous_level.empty() ? 1 : previous_level.size();
    for (std::size_t p = 0; p < parents; ++p) {
      for (std::uint32_t k = 0; k < params.fanout; ++k) {
        Gate g;
        g.id = next_id++;
        if (!previous_level.empty()) g.parent = previous_level[p];
        g.offset = static_cast<std::size_t>(level - 1) * params.magic_len;
        do {
          g.expected.clear();
          for (std::uint32_t i = 0; i < params.magic_len; ++i) g.expected.push_back(rng.next_byte());
        } while (!used_magic.insert(g.expected).second);
        current_level.push_back(g.id);
        gates.push_back(std::move(g));
      }
    }
    previous_level = std::move(current_level);
  }

  // Deepest-level tail gates crash.
  for (std::uint32_t i = 0; i < params.crash_count; ++i) {
    gates[gates.size() - 1 - i].crash = true;
  }

  const std::size_t max_len =
      std::max<std::size_t>(4, static_cast<std::size_t>(params.depth) * params.magic_len);
  std::string name = params.name;
  if (name.empty()) {
    name = "gen-d" + std::to_string(params.depth) + "-f" + std::to_string(params.fanout) + "-m" +
           std::to_string(params.magic_len) + "-c" + std::to_string(params.crash_count) + "-s" +
           std::to_string(params.seed);
  }
  return TargetSpec(std::move(gates), max_len, {}, std::move(name));
}

json report_to_json(const CampaignReport& report, const CampaignConfig& cfg) {
  json class_cov = json::object();
  for (const auto& [cls, series] : report.class_coverage) {
    class_cov[to_string(cls)] = series_to_json(series);
  }

  char target_hex[17];
  std::snprintf(target_hex, sizeof target_hex, "%016llx",
                static_cast<unsigned long long>(report.target_id));

  return json{
      {"label", report.label},
      {"policy", to_string(report.policy)},
      {"target_id", std::string(target_hex)},
      {"seed", report.seed},
      {"nodes", report.n_nodes},
      {"total_ticks", report.total_ticks},
      {"sample_interval", report.sample_interval},
      {"final_coverage", report.final_coverage},
      {"max_crashes", report.max_crashes},
      {"first_crash_tick",
       report.first_crash_tick ? json(*report.first_crash_tick) : json(nullptr)},
      {"ammuina_round_ticks", report.ammuina_round_ticks},
      {"messages",
       {{"sent", report.messages_sent},
        {"delivered", report.messages_delivered},
        {"in_flight_after_drain", report.in_flight_after_drain}}},
      {"total_sync_cost", report.total_sync_cost},
      {"total_execs", report.total_execs},
      {"aggregate_coverage", series_to_json(report.aggregate_coverage)},
      {"class_coverage", class_cov},
      {"config", config_to_json(cfg)},
  };
}

CampaignReport report_from_json(const json& j) {
  CampaignReport report;
  report.label = j.at("label").get<std::string>();
  if (auto p = policy_from_string(j.at("policy").get<std::string>())) report.policy = *p;
  report.target_id = std::stoull(j.at("target_id").get<std::string>(), nullptr, 16);
  report.seed = j.at("seed").get<std::uint64_t>();
  report.n_nodes = j.at("nodes").get<std::uint32_t>();
  report.total_ticks = j.at("total_ticks").get<Tick>();
  report.sample_interval = j.at("sample_interval").get<Tick>();
  report.final_coverage = j.at("final_coverage").get<std::uint64_t>();
  report.max_crashes = j.at("max_crashes").get<std::uint64_t>();
  if (!j.at("first_crash_tick").is_null())
    report.first_crash_tick = j.at("first_crash_tick").get<Tick>();
  for (const auto& t : j.at("ammuina_round_ticks")) report.ammuina_round_ticks.push_back(t.get<Tick>());
  report.messages_sent = j.at("messages").at("sent").get<std::uint64_t>();
  report.messages_delivered = j.at("messages").at("delivered").get<std::uint64_t>();
  report.total_sync_cost = j.at("total_sync_cost").get<Cost>();
  report.aggregate_coverage = series_from_json(j.at("aggregate_coverage"));
  for (const auto& [key, series] : j.at("class_coverage").items()) {
    auto cls = fuzzer_class_from_string(key);
    if (!cls) throw ParseError("unknown fuzzer class \"" + key + "\" in report");
    report.class_coverage[*cls] = series_from_json(series);
  }
  return report;
}

json tables_to_json(std::span<const CoverageTable> tables) {
  json out = json::array();
  for (const CoverageTable& table : tables) {
    json rows = json::array();
    for (const auto& row : table.rows) {
      json cells = json::array();
      for (const auto& cell : row.cells) cells.push_back(cell ? json(*cell) : json(nullptr));
      rows.push_back(json{{"label", row.label}, {"ticks", cells}});
    }
    json fractions = json::array();
    for (const Fraction& f : table.fractions) fractions.push_back(f.str());
    out.push_back(json{{"scope", table.scope},
                       {"best", table.best},
                       {"fractions", fractions},
                       {"rows", rows}});
  }
  return out;
}

}  // namespace dissim
