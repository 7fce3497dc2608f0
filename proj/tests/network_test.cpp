#include <gtest/gtest.h>

#include <fmt/format.h>

#include <algorithm>

#include "soqn/error.hpp"
#include "soqn/network.hpp"

namespace soqn {
namespace {

NodeId id(const std::string& s) { return NodeId{s}; }

NodeSpec spec(const std::string& name, double lat, double lon, NodeRole role = NodeRole::peer,
              double alt = 100.0) {
  return NodeSpec{id(name), role, GeoPosition::make(lat, lon, alt)};
}

NetworkParams short_range() {
  NetworkParams p;
  p.feasibility.max_range_km = 10.0;
  return p;
}

struct Harness {
  explicit Harness(Mode mode, NetworkParams params = short_range(), std::uint64_t seed = 7)
      : net(mode, std::move(params), seed, log, queue) {}
  EventLog log;
  EventQueue queue;
  Network net;
};

std::set<LinkKey> feasibility_oracle(const Network& net) {
  std::set<LinkKey> out;
  const auto ids = net.node_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const NodeState& a = net.node(ids[i]);
      const NodeState& b = net.node(ids[j]);
      if (!net.is_deployed(a.id) || !net.is_deployed(b.id)) continue;
      if (net.mode() == Mode::cs && a.role == NodeRole::client && b.role == NodeRole::client) {
        continue;
      }
      if (link_feasible(a.position, b.position, net.params().feasibility)) {
        out.insert(LinkKey(a.id, b.id));
      }
    }
  }
  return out;
}

void expect_consistent(const Network& net) {
  const auto expected = feasibility_oracle(net);
  EXPECT_EQ(net.active_links(), expected);
  for (const auto& n : net.node_ids()) {
    std::set<LinkKey> table;
    for (const auto& [k, _] : net.table(n).links) table.insert(k);
    EXPECT_EQ(table, expected) << n.value;
  }
  EXPECT_NO_THROW(net.check_invariants());
}

std::size_t consumed(const Network& net, const char* a, const char* b) {
  const KeyBuffer* kb = net.key_buffer(id(a), id(b));
  return kb ? kb->consumed_offset() : 0;
}

BitString message(std::size_t n) {
  BitString m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = static_cast<std::uint8_t>((i * 7 + 3) % 5 < 2);
  return m;
}

// Three peers 0.05 deg apart: about 5.6 km pairwise.
std::vector<NodeSpec> triangle() {
  return {spec("A", 0.0, 0.0), spec("B", 0.05, 0.0), spec("C", 0.0, 0.05)};
}

// A - R - B chain with A and B about 13 km apart, beyond the 10 km range.
std::vector<NodeSpec> chain() {
  return {spec("A", 0.0, 0.0), spec("R", 0.06, 0.0), spec("B", 0.12, 0.0)};
}

TEST(Organize, Triangle) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  EXPECT_EQ(h.net.active_links().size(), 3u);
  for (const auto& n : h.net.node_ids()) EXPECT_EQ(h.net.table(n).links.size(), 3u);
  expect_consistent(h.net);
}

TEST(Organize, OutOfRangePairIsAbsent) {
  Harness h(Mode::p2p);
  h.net.organize(chain());
  EXPECT_EQ(h.net.active_links().size(), 2u);
  for (const auto& n : h.net.node_ids()) {
    EXPECT_FALSE(h.net.table(n).has_link(id("A"), id("B")));
    EXPECT_TRUE(h.net.table(n).has_link(id("A"), id("R")));
  }
  expect_consistent(h.net);
}

TEST(Organize, ClientServerHasNoClientLinks) {
  Harness h(Mode::cs);
  h.net.organize({spec("S", 0.0, 0.0, NodeRole::server), spec("C1", 0.03, 0.0, NodeRole::client),
                  spec("C2", 0.0, 0.03, NodeRole::client)});
  EXPECT_EQ(h.net.active_links().size(), 2u);
  EXPECT_FALSE(h.net.table(id("S")).has_link(id("C1"), id("C2")));
  expect_consistent(h.net);
}

TEST(Organize, Errors) {
  Harness h(Mode::p2p);
  EXPECT_THROW(h.net.organize({spec("A", 0, 0), spec("A", 0.01, 0)}), Error);
  Harness cs(Mode::cs);
  EXPECT_THROW(cs.net.organize({spec("A", 0, 0, NodeRole::peer)}), Error);
  Harness ok(Mode::p2p);
  ok.net.organize(triangle());
  EXPECT_THROW(ok.net.organize(triangle()), Error);
}

TEST(Organize, FarApartNodesUseLineOfSight) {
  NetworkParams p;
  Harness h(Mode::p2p, p);
  // 0.3 deg is about 33 km: inside the range but below the horizon at 2 m.
  h.net.organize({spec("A", 0.0, 0.0, NodeRole::peer, 0.0), spec("B", 0.3, 0.0, NodeRole::peer, 0.0),
                  spec("C", 0.0, 0.3, NodeRole::peer, 3000.0),
                  spec("D", 0.3, 0.3, NodeRole::peer, 3000.0)});
  EXPECT_FALSE(h.net.active_links().contains(LinkKey(id("A"), id("B"))));
  EXPECT_TRUE(h.net.active_links().contains(LinkKey(id("C"), id("D"))));
  EXPECT_TRUE(h.net.active_links().contains(LinkKey(id("A"), id("C"))));
  expect_consistent(h.net);
}

TEST(Join, PeerInRangeOfTwo) {
  Harness h(Mode::p2p);
  h.net.organize(chain());
  const auto before = h.net.table(id("A")).version;
  h.net.join(spec("D", 0.03, 0.0));
  // D sits between A and R; B is 10 km away and just out of range.
  EXPECT_EQ(h.net.active_links().size(), 4u);
  EXPECT_GT(h.net.table(id("A")).version, before);
  expect_consistent(h.net);
  EXPECT_EQ(h.net.table(id("D")).version, h.net.table(id("A")).version);
}

TEST(Join, IsolatedClientGetsNoRoute) {
  Harness h(Mode::cs);
  h.net.organize({spec("S", 0.0, 0.0, NodeRole::server), spec("C1", 0.03, 0.0, NodeRole::client)});
  h.net.join(spec("C9", 5.0, 5.0, NodeRole::client));
  expect_consistent(h.net);
  EXPECT_TRUE(h.net.table(id("C9")).links.size() == 1u);
  const auto rec = h.net.send_message(id("C9"), id("C1"), message(8));
  EXPECT_EQ(rec.outcome, DeliveryOutcome::no_route);
}

TEST(Join, DuplicateIdIsRejectedWithoutSideEffects) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  const auto links = h.net.active_links();
  const auto log_size = h.log.size();
  try {
    h.net.join(spec("A", 0.5, 0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::duplicate_node);
  }
  EXPECT_EQ(h.net.active_links(), links);
  EXPECT_EQ(h.log.size(), log_size);
}

TEST(Join, OrganizeSubsetThenJoinMatchesOrganizeAll) {
  RandomStream rng(11, "net/join-equivalence");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.below(10);
    std::vector<NodeSpec> nodes;
    for (std::size_t i = 0; i < n; ++i) {
      nodes.push_back(spec(fmt::format("n{:02}", i), rng.uniform() * 0.2, rng.uniform() * 0.2,
                           NodeRole::peer, rng.uniform() * 200.0));
    }
    Harness all(Mode::p2p);
    all.net.organize(nodes);
    Harness part(Mode::p2p);
    const std::size_t k = 1 + rng.below(n - 1);
    part.net.organize(std::vector<NodeSpec>(nodes.begin(), nodes.begin() + k));
    for (std::size_t i = k; i < n; ++i) part.net.join(nodes[i]);
    EXPECT_EQ(all.net.active_links(), part.net.active_links());
    expect_consistent(part.net);
  }
}

TEST(Move, WithinEnvelopeKeepsLinksAndBumpsVersion) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  const auto links = h.net.active_links();
  const auto version = h.net.table(id("A")).version;
  h.net.move(id("A"), GeoPosition::make(0.001, 0.001, 100.0));
  EXPECT_EQ(h.net.active_links(), links);
  EXPECT_GT(h.net.table(id("A")).version, version);
  expect_consistent(h.net);
}

TEST(Move, OutOfRangeDropsIncidentLinks) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  h.net.move(id("A"), GeoPosition::make(10.0, 10.0, 100.0));
  EXPECT_EQ(h.net.active_links(), (std::set<LinkKey>{LinkKey(id("B"), id("C"))}));
  expect_consistent(h.net);
  EXPECT_THROW(h.net.move(id("Z"), GeoPosition::make(0, 0, 0)), Error);
}

TEST(Move, RandomMovesMatchFeasibilityOracle) {
  for (Mode mode : {Mode::p2p, Mode::cs}) {
    RandomStream rng(12, mode == Mode::p2p ? "net/moves/p2p" : "net/moves/cs");
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < 20; ++i) {
      NodeRole role = NodeRole::peer;
      if (mode == Mode::cs) role = i < 5 ? NodeRole::server : NodeRole::client;
      nodes.push_back(spec(fmt::format("n{:02}", i), rng.uniform() * 0.2, rng.uniform() * 0.2, role,
                           rng.uniform() * 300.0));
    }
    Harness h(mode);
    h.net.organize(nodes);
    expect_consistent(h.net);
    for (int step = 0; step < 40; ++step) {
      const auto& who = nodes[rng.below(nodes.size())].id;
      h.net.move(who, GeoPosition::make(rng.uniform() * 0.2, rng.uniform() * 0.2,
                                        rng.uniform() * 300.0));
      expect_consistent(h.net);
    }
  }
}

TEST(DirectKey, BothBuffersGrowIdentically) {
  NetworkParams p = short_range();
  p.channel.atm_loss_db_per_km = 0.0;
  p.channel.fixed_system_loss_db = 0.0;
  p.channel.dark_count_prob = 0.0;
  p.channel.detector_efficiency = 1.0;
  p.channel.intrinsic_error_prob = 0.0;
  Harness h(Mode::p2p, p);
  h.net.organize(triangle());
  const auto rec = h.net.generate_direct_key(id("A"), id("B"), 10000);
  ASSERT_FALSE(rec.aborted);
  const KeyBuffer* ab = h.net.key_buffer(id("A"), id("B"));
  const KeyBuffer* ba = h.net.key_buffer(id("B"), id("A"));
  ASSERT_TRUE(ab && ba);
  EXPECT_GT(ab->size(), 0u);
  EXPECT_EQ(ab->size(), ba->size());
  EXPECT_EQ(h.net.sessions().size(), 1u);
  EXPECT_EQ(h.net.sessions()[0].protocol, QkdProtocol::bb84);
}

TEST(DirectKey, EveAbortsAndLeavesBuffersUnchanged) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  h.net.generate_direct_key(id("A"), id("B"), 100000);
  const std::size_t before = h.net.key_buffer(id("A"), id("B"))->size();
  h.net.set_eve(id("A"), id("B"), EveConfig{EveMode::intercept_resend, 0.0});
  const auto rec = h.net.generate_direct_key(id("A"), id("B"), 100000);
  EXPECT_TRUE(rec.aborted);
  EXPECT_EQ(rec.abort_reason, AbortReason::qber_exceeds_threshold);
  EXPECT_EQ(h.net.key_buffer(id("A"), id("B"))->size(), before);
  EXPECT_EQ(h.net.key_buffer(id("B"), id("A"))->size(), before);
}

TEST(DirectKey, InactiveLinkThrows) {
  Harness h(Mode::p2p);
  h.net.organize(chain());
  try {
    h.net.generate_direct_key(id("A"), id("B"), 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::link_inactive);
  }
}

TEST(DirectKey, ClientServerUsesPlugAndPlay) {
  Harness h(Mode::cs);
  h.net.organize({spec("S", 0.0, 0.0, NodeRole::server), spec("C1", 0.03, 0.0, NodeRole::client)});
  const auto rec = h.net.generate_direct_key(id("C1"), id("S"), 100000);
  EXPECT_EQ(rec.protocol, QkdProtocol::plug_and_play);
  EXPECT_FALSE(rec.aborted);
  EXPECT_EQ(h.net.key_buffer(id("S"), id("C1"))->size(), rec.final_key.size());
}

TEST(Send, DirectNeighbors) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  const BitString m = message(256);
  const auto rec = h.net.send_message(id("A"), id("B"), m);
  EXPECT_TRUE(rec.ok());
  EXPECT_TRUE(rec.plaintext_verified);
  EXPECT_FALSE(rec.relayed());
  EXPECT_EQ(rec.key_bits_consumed, 256u);
  EXPECT_EQ(consumed(h.net, "A", "B"), 256u);
  EXPECT_EQ(consumed(h.net, "B", "A"), 256u);
  // A second message uses fresh bits.
  h.net.send_message(id("B"), id("A"), m);
  EXPECT_EQ(consumed(h.net, "A", "B"), 512u);
  EXPECT_NO_THROW(h.net.check_invariants());
}

TEST(Send, SingleRelay) {
  Harness h(Mode::p2p);
  h.net.organize(chain());
  const auto rec = h.net.send_message(id("A"), id("B"), message(128));
  ASSERT_TRUE(rec.ok());
  EXPECT_EQ(rec.path, (std::vector<NodeId>{id("A"), id("R"), id("B")}));
  EXPECT_EQ(rec.key_bits_consumed, 256u);
  EXPECT_EQ(consumed(h.net, "A", "R"), 128u);
  EXPECT_EQ(consumed(h.net, "R", "B"), 128u);
  std::size_t relay_broadcasts = 0;
  for (const auto& r : h.log.records()) {
    if (r.kind == "broadcast" && r.details.find("type=relay_xor") != std::string::npos) {
      ++relay_broadcasts;
    }
  }
  EXPECT_EQ(relay_broadcasts, 1u);
  EXPECT_TRUE(h.net.node(id("B")).relay_inbox.empty());
}

TEST(Send, RelaySetupStarvationNamesHopAndConsumesNothing) {
  Harness h(Mode::p2p);
  h.net.organize(chain());
  h.net.generate_direct_key(id("A"), id("R"), 100000);
  try {
    h.net.relay_key_setup({id("A"), id("R"), id("B")}, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::key_starvation);
    EXPECT_NE(std::string(e.what()).find("R-B"), std::string::npos) << e.what();
  }
  EXPECT_EQ(consumed(h.net, "A", "R"), 0u);
}

TEST(Send, MultiHopClientServer) {
  Harness h(Mode::cs);
  h.net.organize({spec("S1", 0.0, 0.0, NodeRole::server), spec("S2", 0.06, 0.0, NodeRole::server),
                  spec("C1", -0.03, 0.0, NodeRole::client),
                  spec("C2", 0.09, 0.0, NodeRole::client)});
  expect_consistent(h.net);
  const auto rec = h.net.send_message(id("C1"), id("C2"), message(64));
  ASSERT_TRUE(rec.ok());
  EXPECT_EQ(rec.path, (std::vector<NodeId>{id("C1"), id("S1"), id("S2"), id("C2")}));
  EXPECT_EQ(rec.key_bits_consumed, 192u);
}

TEST(Send, ClientsNeverRelay) {
  Harness h(Mode::cs);
  // C2 sits between S and C3 but may not forward; C3 is out of S's range.
  h.net.organize({spec("S", 0.0, 0.0, NodeRole::server), spec("C2", 0.06, 0.0, NodeRole::client),
                  spec("C3", 0.12, 0.0, NodeRole::client)});
  EXPECT_EQ(h.net.send_message(id("S"), id("C3"), message(8)).outcome, DeliveryOutcome::no_route);
}

TEST(Send, NoRouteConsumesNothing) {
  Harness h(Mode::p2p);
  auto nodes = triangle();
  nodes.push_back(spec("Z", 5.0, 5.0));
  h.net.organize(nodes);
  h.net.generate_direct_key(id("A"), id("B"), 100000);
  const auto rec = h.net.send_message(id("A"), id("Z"), message(32));
  EXPECT_EQ(rec.outcome, DeliveryOutcome::no_route);
  EXPECT_EQ(rec.key_bits_consumed, 0u);
  EXPECT_EQ(consumed(h.net, "A", "B"), 0u);
  EXPECT_TRUE(rec.path.empty());
}

TEST(Send, FailedHopLeavesOtherHopsUntouched) {
  Harness h(Mode::p2p);
  h.net.organize(chain());
  h.net.set_eve(id("R"), id("B"), EveConfig{EveMode::intercept_resend, 0.0});
  const auto rec = h.net.send_message(id("A"), id("B"), message(64));
  EXPECT_EQ(rec.outcome, DeliveryOutcome::qkd_abort);
  ASSERT_TRUE(rec.failing_hop.has_value());
  EXPECT_EQ(*rec.failing_hop, LinkKey(id("R"), id("B")));
  EXPECT_EQ(rec.abort_reason, AbortReason::qber_exceeds_threshold);
  EXPECT_EQ(consumed(h.net, "A", "R"), 0u);
  EXPECT_GT(h.net.key_buffer(id("A"), id("R"))->size(), 0u);
  EXPECT_NO_THROW(h.net.check_invariants());
}

TEST(Send, StarvationWhenSessionsCapped) {
  NetworkParams p = short_range();
  p.max_sessions_per_hop = 0;
  Harness h(Mode::p2p, p);
  h.net.organize(triangle());
  const auto rec = h.net.send_message(id("A"), id("C"), message(16));
  EXPECT_EQ(rec.outcome, DeliveryOutcome::key_starvation);
  EXPECT_EQ(*rec.failing_hop, LinkKey(id("A"), id("C")));
}

TEST(Send, ZeroLengthAndBadArguments) {
  Harness h(Mode::p2p);
  h.net.organize(triangle());
  const auto rec = h.net.send_message(id("A"), id("B"), BitString{});
  EXPECT_TRUE(rec.ok());
  EXPECT_EQ(rec.key_bits_consumed, 0u);
  EXPECT_THROW(h.net.send_message(id("A"), id("A"), message(4)), Error);
  EXPECT_THROW(h.net.send_message(id("A"), id("Q"), message(4)), Error);
}

TEST(Send, Deterministic) {
  auto run = [] {
    Harness h(Mode::p2p, short_range(), 99);
    h.net.organize(chain());
    h.net.send_message(id("A"), id("B"), message(200));
    h.net.send_message(id("B"), id("R"), message(50));
    return h.log.to_text();
  };
  EXPECT_EQ(run(), run());
}

TEST(Acquisition, DelayedLinksActivateLater) {
  NetworkParams p = short_range();
  p.coarse_delay_s = 1.0;
  p.fine_delay_s = 0.5;
  Harness h(Mode::p2p, p);
  h.net.organize(triangle());
  EXPECT_TRUE(h.net.active_links().empty());
  EXPECT_EQ(h.net.links().size(), 3u);
  EXPECT_NO_THROW(h.net.check_invariants());
  h.queue.run_until(1.0);
  EXPECT_TRUE(h.net.active_links().empty());
  h.queue.run_until(1.5);
  expect_consistent(h.net);
  EXPECT_EQ(h.net.active_links().size(), 3u);
}

TEST(Acquisition, MoveDuringAcquisitionCancelsStaleActivation) {
  NetworkParams p = short_range();
  p.coarse_delay_s = 1.0;
  Harness h(Mode::p2p, p);
  h.net.organize(triangle());
  h.queue.run_until(0.5);
  h.net.move(id("A"), GeoPosition::make(10.0, 10.0, 100.0));
  h.queue.run_until(2.0);
  EXPECT_EQ(h.net.active_links(), (std::set<LinkKey>{LinkKey(id("B"), id("C"))}));
  expect_consistent(h.net);
}

TEST(Params, SetByName) {
  NetworkParams p;
  EXPECT_TRUE(set_param(p, "max_range_km", 50.0));
  EXPECT_EQ(p.feasibility.max_range_km, 50.0);
  EXPECT_FALSE(set_param(p, "no_such_param", 1.0));
  EXPECT_THROW(set_param(p, "max_range_km", -1.0), Error);
  EXPECT_EQ(p.feasibility.max_range_km, 50.0);
  const auto names = param_names();
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_NE(std::find(names.begin(), names.end(), "pulses_per_session"), names.end());
}

}  // namespace
}  // namespace soqn
