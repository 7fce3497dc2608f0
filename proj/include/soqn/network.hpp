#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "soqn/bus.hpp"
#include "soqn/channel.hpp"
#include "soqn/event_log.hpp"
#include "soqn/event_queue.hpp"
#include "soqn/geo.hpp"
#include "soqn/keys.hpp"
#include "soqn/qkd.hpp"
#include "soqn/routing.hpp"
#include "soqn/types.hpp"

namespace soqn {

struct NetworkParams {
  LinkFeasibilityParams feasibility;
  ChannelParams channel;
  QkdConfig qkd;
  /// Pulses per on-demand QKD session when a send finds too little key.
  std::size_t pulses_per_session = 100000;
  /// Give up on a hop after this many on-demand sessions for one send. Zero
  /// restricts sends to key that was generated beforehand.
  std::size_t max_sessions_per_hop = 4;
  /// When non-zero, every newly active link immediately runs a session of
  /// this many pulses.
  std::size_t precharge_pulses = 0;
  /// ATP stage durations; zero means acquisition completes instantly.
  double coarse_delay_s = 0.0;
  double fine_delay_s = 0.0;
};

void validate(const NetworkParams& params);

/// Sets a parameter by its scenario name. Returns false for unknown names;
/// throws Error(invalid_argument) for an out-of-range value.
bool set_param(NetworkParams& params, std::string_view name, double value);

/// All names accepted by set_param, sorted.
std::vector<std::string> param_names();

struct NodeSpec {
  NodeId id;
  NodeRole role = NodeRole::peer;
  GeoPosition position;
};

struct NodeState {
  NodeId id;
  NodeRole role = NodeRole::peer;
  GeoPosition position;
  RoutingTable table;
  /// Locations learned from broadcasts, including the node's own.
  std::map<NodeId, std::pair<NodeRole, GeoPosition>> known;
  /// This node's copy of the pool shared with each peer.
  std::map<NodeId, KeyBuffer> keys;
  /// Relay broadcasts addressed to this node, by message id.
  std::map<std::uint64_t, std::vector<RelayXor>> relay_inbox;
};

/// Per-session metadata kept for reports; keys themselves are not retained.
struct SessionSummary {
  explicit SessionSummary(LinkKey k) : link(std::move(k)) {}

  LinkKey link;
  double time = 0.0;
  std::uint64_t index = 0;
  std::string stream_label;
  QkdProtocol protocol = QkdProtocol::bb84;
  std::size_t n_pulses = 0;
  std::size_t detections = 0;
  std::size_t sifted_len = 0;
  std::size_t qber_sample_size = 0;
  double qber = 0.0;
  std::size_t leak_bits = 0;
  std::size_t final_len = 0;
  bool aborted = false;
  AbortReason abort_reason = AbortReason::none;
  std::uint64_t key_fingerprint = 0;
};

enum class DeliveryOutcome { delivered, no_route, key_starvation, qkd_abort, not_deployed };

const char* to_string(DeliveryOutcome o);

struct DeliveryRecord {
  std::uint64_t message_id = 0;
  double time = 0.0;
  NodeId src;
  NodeId dst;
  std::vector<NodeId> path;
  std::size_t message_bits = 0;
  DeliveryOutcome outcome = DeliveryOutcome::delivered;
  std::optional<LinkKey> failing_hop;
  AbortReason abort_reason = AbortReason::none;
  /// Pair-level key bits used: message length times hop count.
  std::size_t key_bits_consumed = 0;
  bool plaintext_verified = false;

  bool relayed() const { return path.size() > 2; }
  bool ok() const { return outcome == DeliveryOutcome::delivered; }
};

struct RelaySetup {
  /// Ticket as assembled by the receiver from the relay broadcasts it heard.
  RelayTicket ticket;
  BitString sender_key;
  BitString receiver_key;
};

/// Protocol state for one self-organizing network. All mutation happens on
/// the owning event loop; classical messages travel over the BroadcastBus.
class Network {
 public:
  Network(Mode mode, NetworkParams params, std::uint64_t seed, EventLog& log, EventQueue& queue);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Mode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const NetworkParams& params() const noexcept { return params_; }
  void set_params(NetworkParams params);

  /// Initial organization. In C/S mode the servers form the backbone first
  /// and the clients then join one by one in id order.
  void organize(std::vector<NodeSpec> nodes);
  void join(const NodeSpec& spec);
  void move(const NodeId& id, const GeoPosition& position);

  /// Runs one QKD session over an active link and appends the key to both
  /// endpoints' buffers on success. Throws Error(link_inactive).
  SessionRecord generate_direct_key(const NodeId& a, const NodeId& b, std::size_t n_pulses);

  /// Consumes block_len bits on every hop and publishes the relay XORs.
  /// Throws Error(key_starvation) naming the first short hop; nothing is
  /// consumed in that case.
  RelaySetup relay_key_setup(const std::vector<NodeId>& path, std::size_t block_len);

  DeliveryRecord send_message(const NodeId& src, const NodeId& dst, const BitString& message);

  /// Path from src's routing table, with clients barred from relaying in C/S mode.
  std::vector<NodeId> route(const NodeId& src, const NodeId& dst) const;

  void set_eve(const NodeId& a, const NodeId& b, EveConfig eve);

  bool eligible(NodeRole a, NodeRole b) const;

  bool has_node(const NodeId& id) const { return nodes_.contains(id); }
  bool is_deployed(const NodeId& id) const { return bus_.is_deployed(id); }
  const NodeState& node(const NodeId& id) const;
  std::vector<NodeId> node_ids() const;
  const RoutingTable& table(const NodeId& id) const { return node(id).table; }
  const std::map<LinkKey, OpticalLink>& links() const noexcept { return links_; }
  std::set<LinkKey> active_links() const;
  /// owner's copy of the pool shared with peer, or nullptr.
  const KeyBuffer* key_buffer(const NodeId& owner, const NodeId& peer) const;
  const std::vector<SessionSummary>& sessions() const noexcept { return sessions_; }
  const std::vector<DeliveryRecord>& deliveries() const noexcept { return deliveries_; }
  /// Lowest-id deployed server (C/S) or node (P2P); nullopt when empty.
  std::optional<NodeId> coordinator() const;

  /// Throws Error(invariant_violation) describing the first broken invariant.
  void check_invariants() const;

 private:
  NodeState& mutable_node(const NodeId& id);
  void check_topology() const;
  void validate_spec(const NodeSpec& spec) const;
  NodeState& deploy(const NodeSpec& spec);
  void on_receive(const NodeId& receiver, const NodeId& origin, const Payload& payload);
  void apply_report(NodeState& n, const LinkReport& report);
  void publish_report(const NodeId& origin, const LinkReport& report);
  /// ATP attempt from initiator toward target using the target's announced
  /// location. Returns the report entry when the link is immediately active.
  std::optional<LinkReportEntry> try_acquire(const NodeId& initiator, const NodeId& target);
  void activate(const LinkKey& key);
  /// Attempts every eligible known node, lowest id first.
  std::vector<LinkReportEntry> acquire_all(const NodeId& initiator,
                                           const std::optional<NodeId>& above = std::nullopt);
  KeyBuffer& buffer(const NodeId& owner, const NodeId& peer);
  std::size_t shared_available(const NodeId& a, const NodeId& b) const;
  void log_consume(const NodeId& owner, const NodeId& peer, std::size_t offset, std::size_t len,
                   std::uint64_t message_id);
  DeliveryRecord finish(DeliveryRecord rec);

  Mode mode_;
  NetworkParams params_;
  std::uint64_t seed_;
  EventLog& log_;
  EventQueue& queue_;
  BroadcastBus bus_;
  std::map<NodeId, NodeState> nodes_;
  std::map<LinkKey, OpticalLink> links_;
  std::map<LinkKey, std::uint64_t> link_generation_;
  std::map<LinkKey, std::uint64_t> session_counter_;
  std::map<LinkKey, EveConfig> eve_;
  std::vector<SessionSummary> sessions_;
  std::vector<DeliveryRecord> deliveries_;
  std::uint64_t next_message_id_ = 1;
  std::uint64_t current_message_id_ = 0;
  bool organized_ = false;
  /// Bumped on every link or routing-table change; lets check_invariants
  /// skip the table comparison when nothing moved since the last check.
  std::uint64_t topology_epoch_ = 0;
  mutable std::uint64_t verified_epoch_ = ~std::uint64_t{0};
};

}  // namespace soqn
