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

#include "dissim/transport.hpp"

#include <algorithm>
#include <cassert>
#include <utility>

namespace dissim {

std::size_t SendQueue::poll_completions(Tick now) {
  const std::size_t before = entries_.size();
  std::erase_if(entries_, [now](const PendingSend& ps) { return ps.delivery_tick <= now; });
  return before - entries_.size();
}

InMemoryTransport::InMemoryTransport(std::uint32_t n_nodes, LatencyModel latency, bool log_traffic)
    : n_nodes_(n_nodes),
      latency_(latency),
      log_traffic_(log_traffic),
      channels_(static_cast<std::size_t>(n_nodes) * n_nodes) {}

PendingSend InMemoryTransport::send_async(NodeId from, NodeId dest, Message msg, Tick now) {
  if (dest >= n_nodes_) throw UnknownDestination(dest);
  if (from >= n_nodes_) throw UnknownDestination(from);
  if (from == dest) throw std::logic_error("self-send is rejected at the policy layer");

  Tick delivery = latency_.delivery_tick(now, wire_size(msg));
  auto& chan = channel(from, dest);
  if (!chan.empty()) delivery = std::max(delivery, chan.back().delivery_tick);

  if (log_traffic_) log_.push_back({now, from, dest, kind_of(msg)});

  PendingSend ps{next_handle_++, dest, msg, now, delivery};
  chan.push_back({std::move(msg), delivery});
  ++sent_;
  return ps;
}

std::optional<NodeId> InMemoryTransport::probe(NodeId me, Tick now) {
  std::optional<NodeId> best;
  Tick best_tick = 0;
  for (NodeId src = 0; src < n_nodes_; ++src) {
    if (src == me) continue;
    const auto& chan = channel(src, me);
    if (chan.empty()) continue;
    // FIFO per channel: only the head can be the earliest of this channel.
    const Tick t = chan.front().delivery_tick;
    if (t > now) continue;
    if (!best || t < best_tick) {
      best = src;
      best_tick = t;
    }
    // Ties between sources resolve to the lower rank, which the scan order
    // already guarantees.
  }
  return best;
}

Message InMemoryTransport::receive(NodeId me, NodeId source, Tick now) {
  if (source >= n_nodes_ || me >= n_nodes_) throw NothingToReceive();
  auto& chan = channel(source, me);
  if (chan.empty() || chan.front().delivery_tick > now) throw NothingToReceive();
  Message msg = std::move(chan.front().msg);
  chan.pop_front();
  ++delivered_;
  return msg;
}

ExchangeResult InMemoryTransport::exchange_all(
    const std::vector<std::vector<TestCase>>& contributions, Tick now) {
  assert(contributions.size() == n_nodes_);

  std::size_t largest = 0;
  for (const auto& contribution : contributions) {
    std::size_t bytes = 0;
    for (const TestCase& tc : contribution) bytes += tc.payload.size();
    largest = std::max(largest, bytes);
  }

  ExchangeResult result;
  result.completed_at = latency_.delivery_tick(now, largest);
  result.received.resize(n_nodes_);
  for (NodeId me = 0; me < n_nodes_; ++me) {
    for (NodeId peer = 0; peer < n_nodes_; ++peer) {
      if (peer == me || contributions[peer].empty()) continue;
      auto& out = result.received[me];
      out.insert(out.end(), contributions[peer].begin(), contributions[peer].end());
      if (log_traffic_) log_.push_back({now, peer, me, MessageKind::kAmmuinaBatch});
    }
  }
  return result;
}

std::uint64_t InMemoryTransport::in_flight_of(MessageKind k) const {
  std::uint64_t count = 0;
  for (const auto& chan : channels_) {
    for (const auto& m : chan) {
      if (kind_of(m.msg) == k) ++count;
    }
  }
  return count;
}

}  // namespace dissim
