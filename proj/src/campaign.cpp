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

#include "dissim/campaign.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>

namespace dissim {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::ostringstream os;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) os << "; ";
    os << lines[i];
  }
  return os.str();
}

// Single default seed input when the target brings none.
std::vector<std::vector<std::uint8_t>> effective_seeds(const TargetSpec& target) {
  if (!target.seeds().empty()) return target.seeds();
  return {std::vector<std::uint8_t>(4, 0x00)};
}

}  // namespace

ConfigInvalid::ConfigInvalid(const std::vector<std::string>& v)
    : std::runtime_error("invalid campaign config: " + join_lines(v)), violations(v) {}

Campaign::Campaign(CampaignConfig cfg, const TargetSpec& target, std::uint64_t target_id)
    : cfg_(std::move(cfg)), target_(target), target_id_(target_id) {
  if (cfg_.class_assignment.empty())
    cfg_.class_assignment.assign(cfg_.n_nodes, FuzzerClass::kOther);

  transport_ = std::make_unique<InMemoryTransport>(
      cfg_.n_nodes, LatencyModel{cfg_.base_latency, cfg_.per_byte_latency}, cfg_.log_messages);
  plan_ = build_cluster_plan(cfg_.class_assignment);
  tally_.first_cover_tick.resize(cfg_.n_nodes);

  nodes_.reserve(cfg_.n_nodes);
  for (NodeId r = 0; r < cfg_.n_nodes; ++r) {
    PolicyEngine engine(cfg_.policy, r, cfg_, &plan_);
    nodes_.push_back(std::make_unique<FuzzerNode>(r, cfg_.class_assignment[r], cfg_, target_,
                                                  *transport_, tally_, std::move(engine)));
  }
  coverage_at_last_boundary_.assign(cfg_.n_nodes, 0);

  import_seeds();
  record_samples(0);  // tick-0 baseline
  for (NodeId r = 0; r < cfg_.n_nodes; ++r)
    coverage_at_last_boundary_[r] = nodes_[r]->corpus().coverage.count();
}

void Campaign::import_seeds() {
  for (auto& node : nodes_) {
    for (const auto& seed : effective_seeds(target_)) node->import_seed(seed, 0);
  }
}

void Campaign::step() {
  if (now_ >= cfg_.total_ticks) throw CampaignFinished();

  for (auto& node : nodes_) {
    node->send_queue().poll_completions(now_);
    node->sync_fuzzers(now_);
    node->flush_policy(now_);
    if (now_ >= node->stalled_until()) {
      for (std::uint32_t i = 0; i < cfg_.execs_per_tick; ++i) node->fuzz_iteration(now_);
    }
  }

  ++now_;
  if (now_ % cfg_.sample_interval == 0) {
    record_samples(now_);
    stagnation_checks(now_);
  }
  maybe_run_ammuina_round(now_);
}

void Campaign::record_samples(Tick t) {
  for (NodeId r = 0; r < cfg_.n_nodes; ++r) {
    const Corpus& c = nodes_[r]->corpus();
    samples_.push_back({t, r, c.coverage.count(), c.cases.size(), nodes_[r]->sync_cost(),
                        c.crashes_found});
  }
  aggregate_series_.push_back({t, tally_.global_coverage.count()});
  for (const auto& [cls, members] : plan_.clusters) {
    class_series_[cls].push_back({t, tally_.class_coverage[cls].count()});
  }
}

void Campaign::stagnation_checks(Tick t) {
  if (!cfg_.ammuina_enabled) {
    for (NodeId r = 0; r < cfg_.n_nodes; ++r)
      coverage_at_last_boundary_[r] = nodes_[r]->corpus().coverage.count();
    return;
  }
  for (NodeId r = 0; r < cfg_.n_nodes; ++r) {
    FuzzerNode& node = *nodes_[r];
    const std::uint64_t cov = node.corpus().coverage.count();
    const auto increment =
        static_cast<std::int64_t>(cov) - static_cast<std::int64_t>(coverage_at_last_boundary_[r]);
    coverage_at_last_boundary_[r] = cov;

    if (node.ammuina().pending_request) {
      // A round is already on its way; requests are coalesced.
      continue;
    }
    if (check_stagnation(node.ammuina(), increment, t, cfg_) == StagnationCheck::kTrigger) {
      node.ammuina().pending_request = true;
      for (NodeId peer = 0; peer < cfg_.n_nodes; ++peer) {
        if (peer == r)
          continue;
        // Request broadcasts happen at the stats update, outside the two
        // measured sync paths, so they carry no sync cost.
        node.send_queue().push(
            transport_->send_async(r, peer, Message{AmmuinaRequest{r, t}}, t));
      }
    }
  }
}

void Campaign::maybe_run_ammuina_round(Tick t) {
  if (!cfg_.ammuina_enabled) return;
  bool pending = false;
  for (auto& node : nodes_) pending = pending || node->ammuina().pending_request;
  if (!pending) return;
  // Round barrier: the tick after every broadcast request reached its
  // destination and was consumed.
  if (transport_->in_flight_of(MessageKind::kAmmuinaRequest) > 0) return;

  std::vector<std::vector<TestCase>> contributions;
  contributions.reserve(cfg_.n_nodes);
  for (auto& node : nodes_) {
    auto contribution = node->take_ammuina_contribution();
    node->charge_sync_cost(cfg_.c_send * contribution.size());
    contributions.push_back(std::move(contribution));
  }

  ExchangeResult exchange = transport_->exchange_all(contributions, t);
  for (NodeId r = 0; r < cfg_.n_nodes; ++r) {
    nodes_[r]->evaluate_ammuina(exchange.received[r], t);
  }
  for (NodeId r = 0; r < cfg_.n_nodes; ++r) {
    FuzzerNode& node = *nodes_[r];
    node.ammuina().last_round_tick = t;
    node.ammuina().pending_request = false;
    node.stall_until(exchange.completed_at);
  }
  round_ticks_.push_back(t);
}

void Campaign::drain() {
  // Deliver and evaluate what is still in flight; no new mutations. Replies
  // triggered by late arrivals (policy routes, notices) are drained too.
  const Tick drain_limit = now_ + 10'000'000;
  while (true) {
    bool queues_empty = true;
    for (auto& node : nodes_) {
      node->send_queue().poll_completions(now_);
      node->sync_fuzzers(now_);
      queues_empty = queues_empty && node->send_queue().empty();
    }
    if (transport_->in_flight() == 0 && queues_empty) break;
    ++now_;
    if (now_ > drain_limit) throw std::logic_error("drain did not quiesce");
  }
}

CampaignReport Campaign::build_report() {
  CampaignReport report;
  report.label = to_string(cfg_.policy);
  report.policy = cfg_.policy;
  report.target_id = target_id_;
  report.seed = cfg_.seed;
  report.n_nodes = cfg_.n_nodes;
  report.total_ticks = cfg_.total_ticks;
  report.sample_interval = cfg_.sample_interval;
  report.samples = samples_;
  report.aggregate_coverage = aggregate_series_;
  report.class_coverage = class_series_;
  report.final_coverage = tally_.global_coverage.count();
  report.max_crashes = tally_.crash_ids.size();
  report.first_crash_tick = tally_.first_crash_tick;
  report.ammuina_round_ticks = round_ticks_;
  report.messages_sent = transport_->messages_sent();
  report.messages_delivered = transport_->messages_delivered();
  report.in_flight_after_drain = transport_->in_flight();
  report.send_queues_empty_after_drain = true;
  for (auto& node : nodes_) {
    report.send_queues_empty_after_drain =
        report.send_queues_empty_after_drain && node->send_queue().empty();
    report.total_sync_cost += node->sync_cost();
  }
  report.total_execs = tally_.executions;
  report.gating_violations = tally_.gating_violations;
  if (cfg_.log_messages) report.message_log = transport_->log();
  report.first_cover_ticks = tally_.first_cover_tick;
  return report;
}

CampaignReport Campaign::run() {
  while (now_ < cfg_.total_ticks) step();
  drain();
  return build_report();
}

CampaignReport run_campaign(const CampaignConfig& cfg, const TargetSpec& target,
                            std::uint64_t target_id) {
  auto violations = validate_config(cfg);
  if (!violations.empty()) throw ConfigInvalid(violations);
  Campaign campaign(cfg, target, target_id);
  return campaign.run();
}

}  // namespace dissim
