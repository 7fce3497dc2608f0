#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "soqn/bits.hpp"
#include "soqn/event_log.hpp"
#include "soqn/event_queue.hpp"
#include "soqn/geo.hpp"
#include "soqn/routing.hpp"
#include "soqn/types.hpp"

namespace soqn {

/// Location broadcast. `joining` marks the request a node sends after deployment.
struct LocationAnnounce {
  NodeRole role = NodeRole::peer;
  GeoPosition position;
  bool joining = false;
};

struct LinkReportEntry {
  LinkKey link;
  double distance_km = 0.0;
};

/// Results of ATP attempts; one routing-table version step per report.
struct LinkReport {
  std::vector<LinkReportEntry> up;
  std::vector<LinkKey> down;
};

/// Sent to a joining node so it starts from the network's current view.
struct TableSync {
  std::map<NodeId, std::pair<NodeRole, GeoPosition>> locations;
  RoutingTable table;
};

/// A relay's published K_left xor K_right for one message.
struct RelayXor {
  std::uint64_t message_id = 0;
  NodeId relay;
  NodeId destination;
  std::size_t position = 0;
  BitString block;
};

using Payload = std::variant<LocationAnnounce, LinkReport, TableSync, RelayXor>;

const char* payload_type(const Payload& p);

/// Ideal classical channel: reliable, instantaneous, FIFO per origin.
class BroadcastBus {
 public:
  using Handler =
      std::function<void(const NodeId& receiver, const NodeId& origin, const Payload& payload)>;

  BroadcastBus(EventLog& log, const EventQueue& clock) : log_(log), clock_(clock) {}

  void set_handler(Handler h) { handler_ = std::move(h); }

  void attach(const NodeId& id) { deployed_.insert(id); }
  void detach(const NodeId& id) { deployed_.erase(id); }
  bool is_deployed(const NodeId& id) const { return deployed_.contains(id); }
  const std::set<NodeId>& deployed() const noexcept { return deployed_; }

  /// Delivers to every other deployed node; returns the delivery count.
  std::size_t broadcast(const NodeId& origin, const Payload& payload,
                        const std::string& summary = {});
  void unicast(const NodeId& origin, const NodeId& receiver, const Payload& payload);

 private:
  EventLog& log_;
  const EventQueue& clock_;
  Handler handler_;
  std::set<NodeId> deployed_;
};

}  // namespace soqn
