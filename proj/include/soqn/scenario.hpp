#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "soqn/network.hpp"
#include "soqn/simulator.hpp"

namespace soqn {

struct ScenarioNode {
  NodeSpec spec;
  /// Deployment time; nullopt means 0 unless the node has a join event.
  std::optional<double> deploy_at;

  bool operator==(const ScenarioNode& o) const {
    return spec.id == o.spec.id && spec.role == o.spec.role && spec.position == o.spec.position &&
           deploy_at == o.deploy_at;
  }
};

struct Scenario {
  Mode mode = Mode::p2p;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
  std::vector<ScenarioNode> nodes;
  std::vector<ScenarioEvent> events;

  bool operator==(const Scenario&) const = default;
};

struct ParseError {
  enum class Kind { syntax, semantic };
  Kind kind = Kind::syntax;
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;

  /// "<line>:<column>: <kind> error: <message>"
  std::string to_string() const;
};

using ParseOutcome = std::variant<Scenario, ParseError>;

/// Line-oriented scenario grammar:
///
///   mode p2p|cs
///   seed <u64>
///   param <name> <value>
///   node <id> peer|server|client <lat_deg> <lon_deg> <alt_m> [deploy=<t_s>]
///   at <t_s> join <id>
///   at <t_s> move <id> <lat> <lon> <alt>
///   at <t_s> qkd <idA> <idB> pulses=<n>
///   at <t_s> send <src> <dst> hex:<hexstring>
///   at <t_s> eve <idA> <idB> intercept_resend on|off
///
/// '#' starts a comment. Never throws.
ParseOutcome parse_scenario(std::string_view text);

/// Canonical text that parses back to an equal Scenario.
std::string format_scenario(const Scenario& s);

/// Applies params (file values, then overrides) to defaults.
NetworkParams resolve_params(const Scenario& s,
                             const std::map<std::string, double>& overrides = {});

/// Declares the nodes and schedules deployments and events.
void load_scenario(Simulator& sim, const Scenario& s);

/// Time of the last deployment or event.
double last_event_time(const Scenario& s);

}  // namespace soqn
