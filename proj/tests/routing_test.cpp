#include <gtest/gtest.h>

#include "soqn/error.hpp"
#include "soqn/random.hpp"
#include "soqn/routing.hpp"

namespace soqn {
namespace {

NodeId n(const char* s) { return NodeId{s}; }

RoutingTable table(std::initializer_list<std::tuple<const char*, const char*, double>> links) {
  RoutingTable t{n("owner"), {}, 0};
  for (const auto& [a, b, d] : links) t.links.emplace(LinkKey(n(a), n(b)), d);
  return t;
}

std::vector<NodeId> path(std::initializer_list<const char*> ids) {
  std::vector<NodeId> p;
  for (auto id : ids) p.push_back(n(id));
  return p;
}

TEST(FindPath, DirectLink) {
  const auto t = table({{"A", "B", 10.0}});
  EXPECT_EQ(find_path(t, n("A"), n("B")), path({"A", "B"}));
  EXPECT_EQ(find_path(t, n("B"), n("A")), path({"B", "A"}));
  EXPECT_TRUE(t.has_link(n("B"), n("A")));
}

TEST(FindPath, SingleRelay) {
  const auto t = table({{"A", "R", 10.0}, {"R", "B", 10.0}});
  EXPECT_EQ(find_path(t, n("A"), n("B")), path({"A", "R", "B"}));
}

TEST(FindPath, Disconnected) {
  const auto t = table({{"A", "B", 1.0}, {"C", "D", 1.0}});
  try {
    find_path(t, n("A"), n("D"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_route);
  }
  EXPECT_THROW(find_path(t, n("A"), n("Z")), Error);
  EXPECT_THROW(find_path(t, n("A"), n("A")), Error);
}

TEST(FindPath, FewerHopsBeatShorterDistance) {
  const auto t = table({{"A", "B", 100.0}, {"A", "R", 1.0}, {"R", "B", 1.0}});
  EXPECT_EQ(find_path(t, n("A"), n("B")), path({"A", "B"}));
}

TEST(FindPath, EqualHopsPreferShorterDistance) {
  const auto t = table({{"A", "R1", 10.0}, {"R1", "B", 10.0}, {"A", "R2", 5.0}, {"R2", "B", 5.0}});
  EXPECT_EQ(find_path(t, n("A"), n("B")), path({"A", "R2", "B"}));
}

TEST(FindPath, FullTieBreaksOnNodeOrder) {
  const auto t = table({{"A", "R2", 5.0}, {"R2", "B", 5.0}, {"A", "R1", 5.0}, {"R1", "B", 5.0}});
  EXPECT_EQ(find_path(t, n("A"), n("B")), path({"A", "R1", "B"}));
}

TEST(FindPath, RelayFilterExcludesInteriorOnly) {
  const auto t = table({{"C1", "S", 3.0}, {"S", "C2", 3.0}, {"C1", "C3", 1.0}, {"C3", "C2", 1.0}});
  const RelayFilter servers_only = [](const NodeId& id) { return id.value[0] == 'S'; };
  EXPECT_EQ(find_path(t, n("C1"), n("C2")), path({"C1", "C3", "C2"}));
  EXPECT_EQ(find_path(t, n("C1"), n("C2"), servers_only), path({"C1", "S", "C2"}));
  const auto no_server = table({{"C1", "C3", 1.0}, {"C3", "C2", 1.0}});
  EXPECT_THROW(find_path(no_server, n("C1"), n("C2"), servers_only), Error);
}

// Brute-force check of hop-count optimality on random graphs via BFS layers.
TEST(FindPath, HopCountMatchesBfsOracle) {
  RandomStream rng(7, "routing/bfs");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nodes = 2 + rng.below(9);
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < nodes; ++i) ids.push_back(NodeId{"v" + std::to_string(i)});
    RoutingTable t{ids[0], {}, 0};
    std::vector<std::vector<bool>> adj(nodes, std::vector<bool>(nodes, false));
    for (std::size_t i = 0; i < nodes; ++i) {
      for (std::size_t j = i + 1; j < nodes; ++j) {
        if (rng.bernoulli(0.3)) {
          adj[i][j] = adj[j][i] = true;
          t.links.emplace(LinkKey(ids[i], ids[j]), 1.0 + rng.uniform() * 10.0);
        }
      }
    }
    std::vector<int> dist(nodes, -1);
    std::vector<std::size_t> frontier = {0};
    dist[0] = 0;
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (auto u : frontier) {
        for (std::size_t v = 0; v < nodes; ++v) {
          if (adj[u][v] && dist[v] < 0) {
            dist[v] = dist[u] + 1;
            next.push_back(v);
          }
        }
      }
      frontier = std::move(next);
    }
    for (std::size_t d = 1; d < nodes; ++d) {
      if (dist[d] < 0) {
        EXPECT_THROW(find_path(t, ids[0], ids[d]), Error);
        continue;
      }
      const auto p = find_path(t, ids[0], ids[d]);
      EXPECT_EQ(static_cast<int>(p.size()) - 1, dist[d]);
      EXPECT_EQ(p.front(), ids[0]);
      EXPECT_EQ(p.back(), ids[d]);
      for (std::size_t i = 0; i + 1 < p.size(); ++i) EXPECT_TRUE(t.has_link(p[i], p[i + 1]));
    }
  }
}

}  // namespace
}  // namespace soqn
