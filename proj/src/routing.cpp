#include "soqn/routing.hpp"

#include <queue>
#include <set>
#include <tuple>

#include "soqn/error.hpp"

namespace soqn {

bool RoutingTable::has_link(const NodeId& a, const NodeId& b) const {
  return a != b && links.contains(LinkKey(a, b));
}

namespace {

struct Label {
  std::size_t hops;
  double distance;
  std::vector<NodeId> path;

  bool operator<(const Label& o) const {
    return std::tie(hops, distance, path) < std::tie(o.hops, o.distance, o.path);
  }
};

struct WorseFirst {
  bool operator()(const Label& a, const Label& b) const { return b < a; }
};

}  // namespace

std::vector<NodeId> find_path(const RoutingTable& table, const NodeId& src, const NodeId& dst,
                              const RelayFilter& may_relay) {
  if (src == dst) throw Error(Errc::invalid_argument, "source equals destination");

  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adjacency;
  for (const auto& [key, dist] : table.links) {
    adjacency[key.first()].emplace_back(key.second(), dist);
    adjacency[key.second()].emplace_back(key.first(), dist);
  }

  // Labels compare as (hops, distance, sequence); every extension strictly
  // increases hops, so the first label settled at a node is its optimum.
  std::priority_queue<Label, std::vector<Label>, WorseFirst> open;
  std::set<NodeId> settled;
  open.push(Label{0, 0.0, {src}});
  while (!open.empty()) {
    Label cur = open.top();
    open.pop();
    const NodeId& at = cur.path.back();
    if (settled.contains(at)) continue;
    settled.insert(at);
    if (at == dst) return cur.path;
    if (at != src && may_relay && !may_relay(at)) continue;
    auto it = adjacency.find(at);
    if (it == adjacency.end()) continue;
    for (const auto& [next, dist] : it->second) {
      if (settled.contains(next)) continue;
      Label ext{cur.hops + 1, cur.distance + dist, cur.path};
      ext.path.push_back(next);
      open.push(std::move(ext));
    }
  }
  throw Error(Errc::no_route, "no route from " + src.value + " to " + dst.value);
}

}  // namespace soqn
