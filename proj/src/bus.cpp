#include "soqn/bus.hpp"

#include <fmt/format.h>

#include "soqn/error.hpp"

namespace soqn {

const char* payload_type(const Payload& p) {
  struct Visitor {
    const char* operator()(const LocationAnnounce& a) const {
      return a.joining ? "join_request" : "location";
    }
    const char* operator()(const LinkReport&) const { return "link_report"; }
    const char* operator()(const TableSync&) const { return "table_sync"; }
    const char* operator()(const RelayXor&) const { return "relay_xor"; }
  };
  return std::visit(Visitor{}, p);
}

std::size_t BroadcastBus::broadcast(const NodeId& origin, const Payload& payload,
                                    const std::string& summary) {
  if (!is_deployed(origin)) {
    throw Error(Errc::undeployed_origin, "broadcast from undeployed node " + origin.value);
  }
  const char* type = payload_type(payload);
  const std::size_t receivers = deployed_.size() - 1;
  log_.append(clock_.now(), "broadcast", origin.value,
              fmt::format("type={} receivers={}{}{}", type, receivers, summary.empty() ? "" : " ",
                          summary));
  // Copy: handlers never deploy nodes, but iteration must not depend on that.
  const std::vector<NodeId> targets(deployed_.begin(), deployed_.end());
  std::size_t delivered = 0;
  for (const auto& to : targets) {
    if (to == origin) continue;
    log_.append(clock_.now(), "recv", to.value, fmt::format("from={} type={}", origin.value, type));
    if (handler_) handler_(to, origin, payload);
    ++delivered;
  }
  return delivered;
}

void BroadcastBus::unicast(const NodeId& origin, const NodeId& receiver, const Payload& payload) {
  if (!is_deployed(origin)) {
    throw Error(Errc::undeployed_origin, "unicast from undeployed node " + origin.value);
  }
  if (!is_deployed(receiver)) {
    throw Error(Errc::unknown_node, "unicast to undeployed node " + receiver.value);
  }
  log_.append(clock_.now(), "unicast", origin.value,
              fmt::format("to={} type={}", receiver.value, payload_type(payload)));
  if (handler_) handler_(receiver, origin, payload);
}

}  // namespace soqn
