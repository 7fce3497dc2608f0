#include "soqn/simulator.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "soqn/error.hpp"

namespace soqn {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::deploy: return "deploy";
    case EventKind::join: return "join";
    case EventKind::move: return "move";
    case EventKind::qkd: return "qkd";
    case EventKind::send: return "send";
    case EventKind::eve_toggle: return "eve_toggle";
    case EventKind::param_set: return "param_set";
  }
  return "?";
}

Simulator::Simulator(Mode mode, NetworkParams params, std::uint64_t seed)
    : network_(mode, std::move(params), seed, log_, queue_) {}

void Simulator::declare(NodeSpec spec) {
  if (declared_.contains(spec.id)) throw Error(Errc::duplicate_node, "duplicate node " + spec.id.value);
  declared_.emplace(spec.id, std::move(spec));
}

void Simulator::schedule(const ScenarioEvent& ev) {
  if (ev.at < queue_.now()) {
    throw Error(Errc::past_schedule, fmt::format("event at {} is before current time {}",
                                                 format_float(ev.at), format_float(queue_.now())));
  }
  if (const auto* d = std::get_if<DeployPayload>(&ev.payload)) {
    if (!declared_.contains(d->id)) throw Error(Errc::unknown_node, "undeclared node " + d->id.value);
    auto& batch = deploy_batches_[ev.at];
    if (batch.empty()) {
      const double t = ev.at;
      queue_.schedule(t, [this, t] { run_deploy_batch(t); });
    }
    batch.push_back(d->id);
    return;
  }
  if (const auto* j = std::get_if<JoinPayload>(&ev.payload)) {
    if (!declared_.contains(j->id)) throw Error(Errc::unknown_node, "undeclared node " + j->id.value);
  }
  queue_.schedule(ev.at, [this, ev] { execute(ev); });
}

void Simulator::snapshot_at(double t) {
  queue_.schedule(t, [this] {
    RoutingSnapshot s;
    s.time = queue_.now();
    if (auto c = network_.coordinator()) {
      const RoutingTable& table = network_.table(*c);
      s.version = table.version;
      s.links = table.links;
    }
    log_.append(queue_.now(), "snapshot", "-",
                fmt::format("version={} links={}", s.version, s.links.size()));
    snapshots_.push_back(std::move(s));
  });
}

void Simulator::run_deploy_batch(double t) {
  auto ids = std::move(deploy_batches_[t]);
  deploy_batches_.erase(t);
  ++events_;
  try {
    if (network_.node_ids().empty()) {
      std::vector<NodeSpec> specs;
      for (const auto& id : ids) specs.push_back(declared_.at(id));
      network_.organize(std::move(specs));
    } else {
      std::sort(ids.begin(), ids.end());
      for (const auto& id : ids) network_.join(declared_.at(id));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::invariant_violation) throw;
    errors_.push_back(e.what());
    log_.append(queue_.now(), "error", "-", fmt::format("code={} event=deploy", to_string(e.code())));
  }
  if (check_invariants_each_event) network_.check_invariants();
}

void Simulator::execute(const ScenarioEvent& ev) {
  ++events_;
  try {
    std::visit(
        [this](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, JoinPayload>) {
            network_.join(declared_.at(p.id));
          } else if constexpr (std::is_same_v<T, MovePayload>) {
            network_.move(p.id, p.position);
          } else if constexpr (std::is_same_v<T, QkdPayload>) {
            network_.generate_direct_key(p.a, p.b, p.pulses);
          } else if constexpr (std::is_same_v<T, SendPayload>) {
            network_.send_message(p.src, p.dst, p.message);
          } else if constexpr (std::is_same_v<T, EvePayload>) {
            network_.set_eve(p.a, p.b,
                             EveConfig{p.on ? EveMode::intercept_resend : EveMode::none, 0.0});
          } else if constexpr (std::is_same_v<T, ParamPayload>) {
            NetworkParams next = network_.params();
            if (!set_param(next, p.name, p.value)) {
              throw Error(Errc::invalid_argument, "unknown parameter " + p.name);
            }
            network_.set_params(next);
            log_.append(queue_.now(), "param", "-",
                        fmt::format("{}={}", p.name, format_float(p.value)));
          }
        },
        ev.payload);
  } catch (const Error& e) {
    if (e.code() == Errc::invariant_violation) throw;
    errors_.push_back(e.what());
    log_.append(queue_.now(), "error", "-",
                fmt::format("code={} event={}", to_string(e.code()), to_string(ev.kind())));
  }
  if (check_invariants_each_event) network_.check_invariants();
}

SimSummary Simulator::run_until(double t_end) {
  queue_.run_until(t_end);
  return summary();
}

SimSummary Simulator::summary() const {
  SimSummary s;
  s.events = events_;
  s.errors = errors_.size();
  s.links = network_.active_links().size();
  s.sessions = network_.sessions().size();
  s.sessions_aborted = static_cast<std::size_t>(
      std::count_if(network_.sessions().begin(), network_.sessions().end(),
                    [](const SessionSummary& x) { return x.aborted; }));
  s.deliveries = network_.deliveries().size();
  s.delivered = static_cast<std::size_t>(
      std::count_if(network_.deliveries().begin(), network_.deliveries().end(),
                    [](const DeliveryRecord& d) { return d.ok(); }));
  return s;
}

}  // namespace soqn
