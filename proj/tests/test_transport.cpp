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

#include <doctest.h>

#include <string_view>
#include <tuple>
#include <vector>

#include "dissim/rng.hpp"
#include "dissim/transport.hpp"

using namespace dissim;

namespace {

Message input_of(std::string_view payload, NodeId origin = 0, Tick at = 0) {
  return Message{InterestingInput{
      make_test_case(std::vector<std::uint8_t>(payload.begin(), payload.end()), origin, at)}};
}

std::string_view payload_of(const Message& m) {
  const auto& tc = std::get<InterestingInput>(m).test_case;
  return std::string_view(reinterpret_cast<const char*>(tc.payload.data()), tc.payload.size());
}

}  // namespace

TEST_CASE("delivery tick follows the latency model") {
  SUBCASE("base latency only") {
    InMemoryTransport t(2, LatencyModel{3, Ratio{0, 1}});
    t.send_async(0, 1, input_of("x"), 10);
    CHECK(!t.probe(1, 12).has_value());
    CHECK(t.probe(1, 13) == NodeId{0});
  }
  SUBCASE("per-byte latency") {
    InMemoryTransport t(2, LatencyModel{0, Ratio{1, 1}});
    t.send_async(0, 1, input_of("12345"), 0);
    CHECK(!t.probe(1, 4).has_value());
    CHECK(t.probe(1, 5) == NodeId{0});
  }
  SUBCASE("fractional per-byte rounds up") {
    InMemoryTransport t(2, LatencyModel{1, Ratio{1, 2}});
    t.send_async(0, 1, input_of("123"), 0);  // 1 + ceil(3/2) = 3
    CHECK(!t.probe(1, 2).has_value());
    CHECK(t.probe(1, 3) == NodeId{0});
  }
  SUBCASE("unknown destination") {
    InMemoryTransport t(2, LatencyModel{});
    CHECK_THROWS_AS(t.send_async(0, 2, input_of("x"), 0), UnknownDestination);
  }
  SUBCASE("self-send is a contract violation") {
    InMemoryTransport t(2, LatencyModel{});
    CHECK_THROWS_AS(t.send_async(1, 1, input_of("x"), 0), std::logic_error);
  }
}

TEST_CASE("poll_completions releases exactly the delivered entries") {
  InMemoryTransport t(2, LatencyModel{3, Ratio{0, 1}});
  SendQueue q;
  q.push(t.send_async(0, 1, input_of("x"), 10));  // delivered at 13

  CHECK(q.poll_completions(12) == 0);
  CHECK(q.size() == 1);
  CHECK(q.poll_completions(13) == 1);
  CHECK(q.empty());
  CHECK(q.poll_completions(14) == 0);  // empty queue is a no-op

  SUBCASE("order of survivors is preserved") {
    InMemoryTransport fresh(2, LatencyModel{3, Ratio{0, 1}});
    SendQueue q2;
    q2.push(fresh.send_async(0, 1, input_of("a"), 0));    // delivers at 3
    q2.push(fresh.send_async(0, 1, input_of("bb"), 5));   // delivers at 8
    q2.push(fresh.send_async(0, 1, input_of("c"), 7));    // delivers at 10
    CHECK(q2.poll_completions(8) == 2);
    REQUIRE(q2.size() == 1);
    CHECK(q2.entries().front().delivery_tick == 10);
  }
}

TEST_CASE("probe returns the earliest deliverable source") {
  // Two messages deliverable at ticks 5 and 7; probing at 6 sees the first.
  InMemoryTransport t(3, LatencyModel{0, Ratio{1, 1}});
  t.send_async(1, 0, input_of("12345"), 0);   // delivery 5
  t.send_async(2, 0, input_of("1234567"), 0); // delivery 7
  CHECK(t.probe(0, 6) == NodeId{1});

  SUBCASE("none when nothing is deliverable") {
    CHECK(!t.probe(0, 4).has_value());
  }
  SUBCASE("boundary: delivery exactly at now is visible") {
    CHECK(t.probe(0, 5) == NodeId{1});
    CHECK(t.probe(0, 7) == NodeId{1});  // still the earliest
  }
}

TEST_CASE("cross-channel ties break toward the lower source rank") {
  // Hand-enumerated three-node scenario: both peers' messages become
  // deliverable at tick 2.
  InMemoryTransport t(3, LatencyModel{2, Ratio{0, 1}});
  t.send_async(2, 0, input_of("from2"), 0);
  t.send_async(1, 0, input_of("from1"), 0);
  CHECK(t.probe(0, 2) == NodeId{1});
  CHECK(payload_of(t.receive(0, 1, 2)) == "from1");
  CHECK(t.probe(0, 2) == NodeId{2});
  CHECK(payload_of(t.receive(0, 2, 2)) == "from2");
  CHECK(!t.probe(0, 2).has_value());
}

TEST_CASE("receive is FIFO per channel and guarded by the probe contract") {
  InMemoryTransport t(2, LatencyModel{0, Ratio{0, 1}});
  t.send_async(0, 1, input_of("m1"), 0);
  t.send_async(0, 1, input_of("m2"), 0);
  CHECK(payload_of(t.receive(1, 0, 0)) == "m1");
  CHECK(payload_of(t.receive(1, 0, 0)) == "m2");
  CHECK_THROWS_AS(t.receive(1, 0, 0), NothingToReceive);

  SUBCASE("not yet deliverable counts as nothing to receive") {
    InMemoryTransport slow(2, LatencyModel{5, Ratio{0, 1}});
    slow.send_async(0, 1, input_of("late"), 0);
    CHECK_THROWS_AS(slow.receive(1, 0, 3), NothingToReceive);
  }
}

TEST_CASE("per-channel FIFO survives size-skewed latencies") {
  // A large message followed by a small one: delivery order must still be
  // send order on that channel.
  InMemoryTransport t(2, LatencyModel{0, Ratio{1, 1}});
  t.send_async(0, 1, input_of("0123456789"), 0);  // nominal delivery 10
  t.send_async(0, 1, input_of("x"), 1);           // nominal delivery 2 -> clamped to 10
  CHECK(!t.probe(1, 9).has_value());
  CHECK(t.probe(1, 10) == NodeId{0});
  CHECK(payload_of(t.receive(1, 0, 10)) == "0123456789");
  CHECK(payload_of(t.receive(1, 0, 10)) == "x");
}

TEST_CASE("property: receive order equals send order per channel") {
  SplitMix64 rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.next_below(4));
    InMemoryTransport t(n, LatencyModel{static_cast<Tick>(rng.next_below(4)),
                                        Ratio{rng.next_below(3), 1 + rng.next_below(2)}});
    // Random schedule of sends; remember per-channel sequence numbers.
    std::vector<std::vector<std::uint64_t>> sent(n * n);
    std::uint64_t sequence = 0;
    Tick now = 0;
    for (int step = 0; step < 60; ++step) {
      now += static_cast<Tick>(rng.next_below(3));
      const NodeId src = static_cast<NodeId>(rng.next_below(n));
      NodeId dst = static_cast<NodeId>(rng.next_below(n));
      if (dst == src) dst = (dst + 1) % n;
      const std::uint64_t seq = sequence++;
      std::vector<std::uint8_t> payload(8 + rng.next_below(8));
      for (std::size_t i = 0; i < 8; ++i) payload[i] = static_cast<std::uint8_t>(seq >> (8 * i));
      t.send_async(src, dst, Message{InterestingInput{make_test_case(payload, src, now)}}, now);
      sent[src * n + dst].push_back(seq);
    }
    // Drain everything far in the future and verify order per channel.
    std::vector<std::vector<std::uint64_t>> got(n * n);
    const Tick late = now + 100;
    for (NodeId me = 0; me < n; ++me) {
      while (auto src = t.probe(me, late)) {
        const Message m = t.receive(me, *src, late);
        const auto& payload = std::get<InterestingInput>(m).test_case.payload;
        std::uint64_t seq = 0;
        for (std::size_t i = 0; i < 8; ++i) seq |= static_cast<std::uint64_t>(payload[i]) << (8 * i);
        got[*src * n + me].push_back(seq);
      }
    }
    CHECK(got == sent);
    CHECK(t.in_flight() == 0);
    CHECK(t.messages_sent() == t.messages_delivered());
  }
}

TEST_CASE("probe never returns a message from the future") {
  SplitMix64 rng(77);
  InMemoryTransport t(3, LatencyModel{2, Ratio{1, 2}});
  std::vector<std::pair<Tick, NodeId>> deliveries;  // (delivery_tick, src)
  for (int i = 0; i < 40; ++i) {
    const Tick at = static_cast<Tick>(rng.next_below(20));
    const NodeId src = 1 + static_cast<NodeId>(rng.next_below(2));
    std::vector<std::uint8_t> payload(rng.next_below(12));
    const auto ps = t.send_async(src, 0, Message{InterestingInput{make_test_case(payload, src, at)}}, at);
    deliveries.emplace_back(ps.delivery_tick, src);
  }
  for (Tick now = 0; now < 40; ++now) {
    while (auto src = t.probe(0, now)) {
      // Find and erase the earliest delivery from that source; it must not
      // be in the future.
      auto best = deliveries.end();
      for (auto it = deliveries.begin(); it != deliveries.end(); ++it) {
        if (it->second != *src) continue;
        if (best == deliveries.end() || it->first < best->first) best = it;
      }
      REQUIRE(best != deliveries.end());
      CHECK(best->first <= now);
      deliveries.erase(best);
      t.receive(0, *src, now);
    }
  }
  CHECK(deliveries.empty());
}

TEST_CASE("exchange_all") {
  InMemoryTransport t(3, LatencyModel{2, Ratio{1, 1}});
  auto tc = [](std::string_view s, NodeId origin) {
    return make_test_case(std::vector<std::uint8_t>(s.begin(), s.end()), origin, 0);
  };

  SUBCASE("every node gets the others' contributions in rank order") {
    const std::vector<std::vector<TestCase>> contributions{
        {tc("a", 0)}, {tc("b", 1)}, {tc("c", 2)}};
    const ExchangeResult r = t.exchange_all(contributions, 10);
    REQUIRE(r.received.size() == 3);
    REQUIRE(r.received[0].size() == 2);
    CHECK(r.received[0][0].origin == 1);
    CHECK(r.received[0][1].origin == 2);
    REQUIRE(r.received[1].size() == 2);
    CHECK(r.received[1][0].origin == 0);
    CHECK(r.received[1][1].origin == 2);
    // Largest contribution is 1 byte: completes at 10 + 2 + 1.
    CHECK(r.completed_at == 13);
  }
  SUBCASE("empty contributions produce empty results") {
    const ExchangeResult r = t.exchange_all({{}, {}, {}}, 5);
    for (const auto& received : r.received) CHECK(received.empty());
    CHECK(r.completed_at == 7);  // base latency only
  }
  SUBCASE("two nodes swap batches") {
    InMemoryTransport pair(2, LatencyModel{0, Ratio{0, 1}});
    const ExchangeResult r = pair.exchange_all({{tc("x", 0)}, {tc("y", 1), tc("z", 1)}}, 0);
    REQUIRE(r.received[0].size() == 2);
    CHECK(r.received[1].size() == 1);
  }
}

TEST_CASE("determinism: a fixed schedule replays identically") {
  auto run_once = [] {
    InMemoryTransport t(4, LatencyModel{1, Ratio{1, 3}}, /*log_traffic=*/true);
    SplitMix64 rng(99);
    for (int i = 0; i < 80; ++i) {
      const NodeId src = static_cast<NodeId>(rng.next_below(4));
      NodeId dst = static_cast<NodeId>(rng.next_below(4));
      if (dst == src) dst = (dst + 1) % 4;
      std::vector<std::uint8_t> payload(rng.next_below(10));
      for (auto& b : payload) b = rng.next_byte();
      t.send_async(src, dst, Message{InterestingInput{make_test_case(payload, src, i)}},
                   static_cast<Tick>(i / 4));
    }
    std::vector<std::tuple<Tick, NodeId, NodeId, std::uint64_t>> consumed;
    for (Tick now = 0; now < 40; ++now) {
      for (NodeId me = 0; me < 4; ++me) {
        while (auto src = t.probe(me, now)) {
          const Message m = t.receive(me, *src, now);
          consumed.emplace_back(now, *src, me, std::get<InterestingInput>(m).test_case.id);
        }
      }
    }
    return consumed;
  };
  CHECK(run_once() == run_once());
}
