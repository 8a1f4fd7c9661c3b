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
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dissim/core.hpp"

namespace dissim {

struct UnknownDestination : std::runtime_error {
  explicit UnknownDestination(NodeId dest)
      : std::runtime_error("unknown destination rank " + std::to_string(dest)) {}
};

struct NothingToReceive : std::runtime_error {
  NothingToReceive() : std::runtime_error("no deliverable message from that source") {}
};

// Delivery timing: a message sent at tick s with b payload bytes becomes
// visible to the receiver at s + base_latency + ceil(per_byte * b).
struct LatencyModel {
  Tick base_latency = 0;
  Ratio per_byte{0, 1};

  Tick delivery_tick(Tick send_tick, std::size_t bytes) const {
    return send_tick + base_latency + static_cast<Tick>(ceil_mul(per_byte, bytes));
  }
};

// One in-flight outbound message. The sender keeps it queued until the
// transport reports completion, at which point the buffer may be reclaimed;
// completion here means the delivery tick has been reached.
struct PendingSend {
  std::uint64_t handle = 0;
  NodeId dest = 0;
  Message message;
  Tick enqueued_at = 0;
  Tick delivery_tick = 0;
};

// Registry of outstanding non-blocking sends for one node. Entries leave
// only through poll_completions; after a campaign drain the queue is empty.
class SendQueue {
 public:
  void push(PendingSend ps) { entries_.push_back(std::move(ps)); }

  // Removes every entry whose message has been delivered (delivery_tick <=
  // now) and returns how many were released. Relative order of the
  // survivors is preserved.
  std::size_t poll_completions(Tick now);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::deque<PendingSend>& entries() const { return entries_; }

 private:
  std::deque<PendingSend> entries_;
};

struct MessageLogEntry {
  Tick tick = 0;  // send tick
  NodeId src = 0;
  NodeId dst = 0;
  MessageKind kind = MessageKind::kInterestingInput;
};

// Result of the all-node scatter/gather exchange: what each node received
// (everything contributed by the others, contributor rank order) and the
// tick at which the collective completes.
struct ExchangeResult {
  std::vector<std::vector<TestCase>> received;
  Tick completed_at = 0;
};

// Abstract asynchronous message-passing layer. The surface is deliberately
// limited to the four primitives the dissemination policies need: a
// non-blocking send, an any-source probe, a matched receive, and one
// collective exchange. A backend binding to a real message-passing runtime
// would implement this same interface.
class Transport {
 public:
  virtual ~Transport() = default;

  // Schedules msg for delivery per the latency model and returns the
  // pending-send record the caller must track until completion. `from` and
  // `dest` must differ; policies never self-send.
  virtual PendingSend send_async(NodeId from, NodeId dest, Message msg, Tick now) = 0;

  // Source of the earliest deliverable message addressed to `me`, if any.
  // Does not consume the message. Simultaneous deliveries from different
  // sources are ordered by lower source rank.
  virtual std::optional<NodeId> probe(NodeId me, Tick now) = 0;

  // Removes and returns the earliest deliverable message from `source`.
  // Per-(source,dest) order is FIFO by send order. Throws NothingToReceive
  // when probe would not have returned this source.
  virtual Message receive(NodeId me, NodeId source, Tick now) = 0;

  // All-node exchange for ammuina rounds; must be invoked at a tick barrier
  // with one contribution list per rank. Completion is charged the latency
  // of the largest contribution plus base latency.
  virtual ExchangeResult exchange_all(const std::vector<std::vector<TestCase>>& contributions,
                                      Tick now) = 0;
};

// Deterministic in-memory transport. Per-channel FIFO is enforced by
// clamping each message's delivery tick to be no earlier than its channel
// predecessor's, mirroring non-overtaking point-to-point semantics.
class InMemoryTransport final : public Transport {
 public:
  InMemoryTransport(std::uint32_t n_nodes, LatencyModel latency, bool log_traffic = false);

  PendingSend send_async(NodeId from, NodeId dest, Message msg, Tick now) override;
  std::optional<NodeId> probe(NodeId me, Tick now) override;
  Message receive(NodeId me, NodeId source, Tick now) override;
  ExchangeResult exchange_all(const std::vector<std::vector<TestCase>>& contributions,
                              Tick now) override;

  std::uint64_t messages_sent() const { return sent_; }
  std::uint64_t messages_delivered() const { return delivered_; }
  // Messages still sitting in channels (sent but not yet consumed).
  std::uint64_t in_flight() const { return sent_ - delivered_; }
  std::uint64_t in_flight_of(MessageKind k) const;

  const std::vector<MessageLogEntry>& log() const { return log_; }

 private:
  struct InFlightMessage {
    Message msg;
    Tick delivery_tick = 0;
  };

  std::deque<InFlightMessage>& channel(NodeId src, NodeId dst) {
    return channels_[static_cast<std::size_t>(src) * n_nodes_ + dst];
  }

  std::uint32_t n_nodes_;
  LatencyModel latency_;
  bool log_traffic_;
  std::vector<std::deque<InFlightMessage>> channels_;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t next_handle_ = 1;
  std::vector<MessageLogEntry> log_;
};

}  // namespace dissim
