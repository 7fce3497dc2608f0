#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "soqn/bits.hpp"
#include "soqn/event_log.hpp"
#include "soqn/event_queue.hpp"
#include "soqn/network.hpp"

namespace soqn {

struct DeployPayload {
  NodeId id;
  bool operator==(const DeployPayload&) const = default;
};
struct JoinPayload {
  NodeId id;
  bool operator==(const JoinPayload&) const = default;
};
struct MovePayload {
  NodeId id;
  GeoPosition position;
  bool operator==(const MovePayload&) const = default;
};
struct QkdPayload {
  NodeId a;
  NodeId b;
  std::size_t pulses = 0;
  bool operator==(const QkdPayload&) const = default;
};
struct SendPayload {
  NodeId src;
  NodeId dst;
  BitString message;
  bool operator==(const SendPayload&) const = default;
};
struct EvePayload {
  NodeId a;
  NodeId b;
  bool on = false;
  bool operator==(const EvePayload&) const = default;
};
struct ParamPayload {
  std::string name;
  double value = 0.0;
  bool operator==(const ParamPayload&) const = default;
};

enum class EventKind { deploy, join, move, qkd, send, eve_toggle, param_set };

const char* to_string(EventKind k);

struct ScenarioEvent {
  double at = 0.0;
  std::variant<DeployPayload, JoinPayload, MovePayload, QkdPayload, SendPayload, EvePayload,
               ParamPayload>
      payload;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
  bool operator==(const ScenarioEvent&) const = default;
};

struct RoutingSnapshot {
  double time = 0.0;
  std::uint64_t version = 0;
  std::map<LinkKey, double> links;
};

struct SimSummary {
  std::size_t events = 0;
  std::size_t errors = 0;
  std::size_t links = 0;
  std::size_t sessions = 0;
  std::size_t sessions_aborted = 0;
  std::size_t deliveries = 0;
  std::size_t delivered = 0;

  bool operator==(const SimSummary&) const = default;
};

/// Event loop that owns the clock, the log and the network state.
class Simulator {
 public:
  Simulator(Mode mode, NetworkParams params, std::uint64_t seed);

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Registers a node that deploy and join events may refer to.
  void declare(NodeSpec spec);

  /// Throws Error(past_schedule) for times before now() and
  /// Error(unknown_node) for undeclared deploy/join targets.
  void schedule(const ScenarioEvent& ev);

  void snapshot_at(double t);

  SimSummary run_until(double t_end);

  double now() const noexcept { return queue_.now(); }
  bool check_invariants_each_event = true;

  const EventLog& log() const noexcept { return log_; }
  Network& network() noexcept { return network_; }
  const Network& network() const noexcept { return network_; }
  const std::vector<RoutingSnapshot>& snapshots() const noexcept { return snapshots_; }
  const std::vector<std::string>& errors() const noexcept { return errors_; }
  SimSummary summary() const;

 private:
  void execute(const ScenarioEvent& ev);
  void run_deploy_batch(double t);

  EventLog log_;
  EventQueue queue_;
  Network network_;
  std::map<NodeId, NodeSpec> declared_;
  std::map<double, std::vector<NodeId>> deploy_batches_;
  std::vector<RoutingSnapshot> snapshots_;
  std::vector<std::string> errors_;
  std::size_t events_ = 0;
};

}  // namespace soqn
