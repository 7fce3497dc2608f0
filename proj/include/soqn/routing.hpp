#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "soqn/types.hpp"

namespace soqn {

/// One node's view of the valid optical links in the network.
struct RoutingTable {
  NodeId owner;
  /// Link -> distance in km. Unordered keys make (a,b) and (b,a) one entry.
  std::map<LinkKey, double> links;
  std::uint64_t version = 0;

  bool has_link(const NodeId& a, const NodeId& b) const;
};

/// Nodes allowed to appear in the interior of a path. Empty means all.
using RelayFilter = std::function<bool(const NodeId&)>;

/// Minimum-hop path, ties broken by total distance and then by the
/// lexicographic order of the node sequence. Throws Error(no_route).
std::vector<NodeId> find_path(const RoutingTable& table, const NodeId& src, const NodeId& dst,
                              const RelayFilter& may_relay = {});

}  // namespace soqn
