#include "soqn/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "soqn/error.hpp"

namespace soqn {
namespace {

std::string link_name(const LinkKey& k) {
  return fmt::format("{}-{}", k.first().value, k.second().value);
}

std::string path_name(const std::vector<NodeId>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out.push_back('>');
    out += path[i].value;
  }
  return out.empty() ? "-" : out;
}

std::size_t to_count(std::string_view name, double v) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw Error(Errc::invalid_argument, fmt::format("{} must be a non-negative integer", name));
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

const char* to_string(DeliveryOutcome o) {
  switch (o) {
    case DeliveryOutcome::delivered: return "delivered";
    case DeliveryOutcome::no_route: return "no_route";
    case DeliveryOutcome::key_starvation: return "key_starvation";
    case DeliveryOutcome::qkd_abort: return "qkd_abort";
    case DeliveryOutcome::not_deployed: return "not_deployed";
  }
  return "?";
}

void validate(const NetworkParams& p) {
  if (!(p.feasibility.max_range_km > 0.0) || !std::isfinite(p.feasibility.max_range_km)) {
    throw Error(Errc::invalid_argument, "max_range_km must be positive and finite");
  }
  validate(p.channel);
  validate(p.qkd);
  if (p.pulses_per_session == 0) throw Error(Errc::invalid_argument, "pulses_per_session is 0");
  if (!(p.coarse_delay_s >= 0.0) || !(p.fine_delay_s >= 0.0) || !std::isfinite(p.coarse_delay_s) ||
      !std::isfinite(p.fine_delay_s)) {
    throw Error(Errc::invalid_argument, "acquisition delays must be finite and non-negative");
  }
}

bool set_param(NetworkParams& p, std::string_view name, double v) {
  NetworkParams next = p;
  if (name == "max_range_km") {
    next.feasibility.max_range_km = v;
  } else if (name == "require_los") {
    if (v != 0.0 && v != 1.0) throw Error(Errc::invalid_argument, "require_los must be 0 or 1");
    next.feasibility.require_los = v != 0.0;
  } else if (name == "atm_loss_db_per_km") {
    next.channel.atm_loss_db_per_km = v;
  } else if (name == "fixed_system_loss_db") {
    next.channel.fixed_system_loss_db = v;
  } else if (name == "dark_count_prob") {
    next.channel.dark_count_prob = v;
  } else if (name == "background_prob") {
    next.channel.background_prob = v;
  } else if (name == "detector_efficiency") {
    next.channel.detector_efficiency = v;
  } else if (name == "intrinsic_error_prob") {
    next.channel.intrinsic_error_prob = v;
  } else if (name == "qber_abort") {
    next.qkd.qber_abort = v;
  } else if (name == "sample_fraction") {
    next.qkd.sample_fraction = v;
  } else if (name == "f_ec") {
    next.qkd.f_ec = v;
  } else if (name == "safety_margin_bits") {
    next.qkd.safety_margin_bits = to_count(name, v);
  } else if (name == "min_sift_len") {
    next.qkd.min_sift_len = to_count(name, v);
  } else if (name == "target_mean_photon") {
    next.qkd.target_mean_photon = v;
  } else if (name == "trojan_tolerance") {
    next.qkd.trojan_tolerance = v;
  } else if (name == "strong_pulse_mean_photons") {
    next.qkd.strong_pulse_mean_photons = v;
  } else if (name == "pulses_per_session") {
    next.pulses_per_session = to_count(name, v);
  } else if (name == "max_sessions_per_hop") {
    next.max_sessions_per_hop = to_count(name, v);
  } else if (name == "precharge_pulses") {
    next.precharge_pulses = to_count(name, v);
  } else if (name == "coarse_delay_s") {
    next.coarse_delay_s = v;
  } else if (name == "fine_delay_s") {
    next.fine_delay_s = v;
  } else {
    return false;
  }
  validate(next);
  p = next;
  return true;
}

std::vector<std::string> param_names() {
  std::vector<std::string> names = {
      "max_range_km",       "require_los",          "atm_loss_db_per_km",
      "fixed_system_loss_db", "dark_count_prob",    "background_prob",
      "detector_efficiency", "intrinsic_error_prob", "qber_abort",
      "sample_fraction",    "f_ec",                 "safety_margin_bits",
      "min_sift_len",       "target_mean_photon",   "trojan_tolerance",
      "strong_pulse_mean_photons", "pulses_per_session", "max_sessions_per_hop",
      "precharge_pulses",   "coarse_delay_s",       "fine_delay_s"};
  std::sort(names.begin(), names.end());
  return names;
}

Network::Network(Mode mode, NetworkParams params, std::uint64_t seed, EventLog& log,
                 EventQueue& queue)
    : mode_(mode), params_(std::move(params)), seed_(seed), log_(log), queue_(queue),
      bus_(log, queue) {
  validate(params_);
  bus_.set_handler([this](const NodeId& receiver, const NodeId& origin, const Payload& payload) {
    on_receive(receiver, origin, payload);
  });
}

void Network::set_params(NetworkParams params) {
  validate(params);
  params_ = std::move(params);
}

bool Network::eligible(NodeRole a, NodeRole b) const {
  if (mode_ == Mode::p2p) return true;
  return !(a == NodeRole::client && b == NodeRole::client);
}

const NodeState& Network::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::unknown_node, "unknown node " + id.value);
  return it->second;
}

NodeState& Network::mutable_node(const NodeId& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::unknown_node, "unknown node " + id.value);
  return it->second;
}

std::vector<NodeId> Network::node_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(nodes_.size());
  for (const auto& [id, _] : nodes_) ids.push_back(id);
  return ids;
}

std::set<LinkKey> Network::active_links() const {
  std::set<LinkKey> out;
  for (const auto& [k, l] : links_) {
    if (l.state == LinkState::active) out.insert(k);
  }
  return out;
}

const KeyBuffer* Network::key_buffer(const NodeId& owner, const NodeId& peer) const {
  auto it = nodes_.find(owner);
  if (it == nodes_.end()) return nullptr;
  auto kb = it->second.keys.find(peer);
  return kb == it->second.keys.end() ? nullptr : &kb->second;
}

std::optional<NodeId> Network::coordinator() const {
  for (const auto& id : bus_.deployed()) {
    if (mode_ == Mode::p2p || node(id).role == NodeRole::server) return id;
  }
  if (!bus_.deployed().empty()) return *bus_.deployed().begin();
  return std::nullopt;
}

void Network::validate_spec(const NodeSpec& spec) const {
  if (spec.id.value.empty()) throw Error(Errc::invalid_argument, "empty node id");
  if (nodes_.contains(spec.id)) throw Error(Errc::duplicate_node, "duplicate node " + spec.id.value);
  const bool p2p_role = spec.role == NodeRole::peer;
  if ((mode_ == Mode::p2p) != p2p_role) {
    throw Error(Errc::invalid_argument,
                fmt::format("role {} not allowed in {} mode", to_string(spec.role), to_string(mode_)));
  }
  if (!is_valid(spec.position)) {
    throw Error(Errc::invalid_argument, "invalid position for " + spec.id.value);
  }
}

NodeState& Network::deploy(const NodeSpec& spec) {
  ++topology_epoch_;
  NodeState n;
  n.id = spec.id;
  n.role = spec.role;
  n.position = spec.position;
  n.table.owner = spec.id;
  n.known[spec.id] = {spec.role, spec.position};
  auto [it, _] = nodes_.emplace(spec.id, std::move(n));
  bus_.attach(spec.id);
  log_.append(queue_.now(), "deploy", spec.id.value,
              fmt::format("role={} lat={} lon={} alt={}", to_string(spec.role),
                          format_float(spec.position.latitude_deg),
                          format_float(spec.position.longitude_deg),
                          format_float(spec.position.altitude_m)));
  return it->second;
}

void Network::on_receive(const NodeId& receiver, const NodeId& origin, const Payload& payload) {
  ++topology_epoch_;
  NodeState& n = mutable_node(receiver);
  if (const auto* loc = std::get_if<LocationAnnounce>(&payload)) {
    n.known[origin] = {loc->role, loc->position};
  } else if (const auto* rep = std::get_if<LinkReport>(&payload)) {
    apply_report(n, *rep);
  } else if (const auto* sync = std::get_if<TableSync>(&payload)) {
    for (const auto& [id, info] : sync->locations) {
      if (id != receiver) n.known[id] = info;
    }
    n.table.links = sync->table.links;
    n.table.version = sync->table.version;
  } else if (const auto* rx = std::get_if<RelayXor>(&payload)) {
    if (rx->destination == receiver) n.relay_inbox[rx->message_id].push_back(*rx);
  }
}

void Network::apply_report(NodeState& n, const LinkReport& report) {
  ++topology_epoch_;
  for (const auto& k : report.down) n.table.links.erase(k);
  for (const auto& e : report.up) n.table.links[e.link] = e.distance_km;
  ++n.table.version;
}

void Network::publish_report(const NodeId& origin, const LinkReport& report) {
  apply_report(mutable_node(origin), report);
  bus_.broadcast(origin, report,
                 fmt::format("up={} down={}", report.up.size(), report.down.size()));
}

std::optional<LinkReportEntry> Network::try_acquire(const NodeId& initiator, const NodeId& target) {
  const NodeState& self = node(initiator);
  auto known = self.known.find(target);
  if (known == self.known.end()) return std::nullopt;
  if (!eligible(self.role, known->second.first)) return std::nullopt;
  const LinkKey key(initiator, target);
  auto existing = links_.find(key);
  if (existing != links_.end() && existing->second.state != LinkState::torn_down) {
    return std::nullopt;
  }
  const GeoPosition& there = known->second.second;
  if (!link_feasible(self.position, there, params_.feasibility)) return std::nullopt;

  const double distance = geodesic_distance(self.position, there, params_.feasibility.earth_radius_km);
  OpticalLink link{key, distance, path_loss_db(distance, params_.channel), queue_.now(),
                   LinkState::acquiring};
  links_.insert_or_assign(key, link);
  ++topology_epoch_;
  const std::uint64_t gen = ++link_generation_[key];

  const double delay = params_.coarse_delay_s + params_.fine_delay_s;
  if (delay <= 0.0) {
    activate(key);
    return LinkReportEntry{key, distance};
  }
  log_.append(queue_.now(), "link_acquiring", initiator.value,
              fmt::format("link={} distance_km={} coarse_s={} fine_s={}", link_name(key),
                          format_float(distance), format_float(params_.coarse_delay_s),
                          format_float(params_.fine_delay_s)));
  queue_.schedule(queue_.now() + delay, [this, key, gen, initiator] {
    auto it = links_.find(key);
    if (it == links_.end() || it->second.state != LinkState::acquiring ||
        link_generation_[key] != gen) {
      return;
    }
    activate(key);
    publish_report(initiator, LinkReport{{LinkReportEntry{key, it->second.distance_km}}, {}});
  });
  return std::nullopt;
}

void Network::activate(const LinkKey& key) {
  ++topology_epoch_;
  OpticalLink& link = links_.at(key);
  link.state = LinkState::active;
  link.acquired_at = queue_.now();
  log_.append(queue_.now(), "link_up", key.first().value,
              fmt::format("link={} distance_km={} loss_db={}", link_name(key),
                          format_float(link.distance_km), format_float(link.loss_db)));
  if (params_.precharge_pulses > 0) {
    generate_direct_key(key.first(), key.second(), params_.precharge_pulses);
  }
}

std::vector<LinkReportEntry> Network::acquire_all(const NodeId& initiator,
                                                  const std::optional<NodeId>& above) {
  std::vector<LinkReportEntry> up;
  // Copy ids: acquisition may run precharge sessions that touch node state.
  std::vector<NodeId> targets;
  for (const auto& [id, _] : node(initiator).known) {
    if (id == initiator || !bus_.is_deployed(id)) continue;
    if (above && !(*above < id)) continue;
    targets.push_back(id);
  }
  for (const auto& t : targets) {
    if (auto e = try_acquire(initiator, t)) up.push_back(*e);
  }
  return up;
}

void Network::organize(std::vector<NodeSpec> nodes) {
  if (organized_) throw Error(Errc::invalid_argument, "network already organized");
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    validate_spec(nodes[i]);
    if (i > 0 && nodes[i].id == nodes[i - 1].id) {
      throw Error(Errc::duplicate_node, "duplicate node " + nodes[i].id.value);
    }
  }
  organized_ = true;

  std::vector<NodeSpec> backbone;
  std::vector<NodeSpec> clients;
  for (auto& n : nodes) (n.role == NodeRole::client ? clients : backbone).push_back(n);

  for (const auto& s : backbone) deploy(s);
  for (const auto& s : backbone) {
    bus_.broadcast(s.id, LocationAnnounce{s.role, s.position, false});
  }
  for (const auto& s : backbone) {
    publish_report(s.id, LinkReport{acquire_all(s.id, s.id), {}});
  }
  for (const auto& c : clients) join(c);
}

void Network::join(const NodeSpec& spec) {
  validate_spec(spec);
  organized_ = true;
  const std::optional<NodeId> coord = coordinator();
  deploy(spec);
  bus_.broadcast(spec.id, LocationAnnounce{spec.role, spec.position, true});
  if (coord) {
    const NodeState& c = node(*coord);
    TableSync sync{c.known, c.table};
    bus_.unicast(*coord, spec.id, sync);
  }
  publish_report(spec.id, LinkReport{acquire_all(spec.id), {}});
}

void Network::move(const NodeId& id, const GeoPosition& position) {
  ++topology_epoch_;
  if (!bus_.is_deployed(id)) throw Error(Errc::unknown_node, "move of undeployed node " + id.value);
  if (!is_valid(position)) throw Error(Errc::invalid_argument, "invalid position for " + id.value);

  LinkReport report;
  for (auto& [key, link] : links_) {
    if (!key.contains(id) || link.state == LinkState::torn_down) continue;
    link.state = LinkState::torn_down;
    report.down.push_back(key);
    log_.append(queue_.now(), "link_down", id.value, fmt::format("link={}", link_name(key)));
  }

  NodeState& n = mutable_node(id);
  n.position = position;
  n.known[id].second = position;
  log_.append(queue_.now(), "move", id.value,
              fmt::format("lat={} lon={} alt={}", format_float(position.latitude_deg),
                          format_float(position.longitude_deg), format_float(position.altitude_m)));
  bus_.broadcast(id, LocationAnnounce{n.role, position, false});
  report.up = acquire_all(id);
  publish_report(id, report);
}

KeyBuffer& Network::buffer(const NodeId& owner, const NodeId& peer) {
  NodeState& n = mutable_node(owner);
  auto it = n.keys.find(peer);
  if (it == n.keys.end()) it = n.keys.emplace(peer, KeyBuffer(LinkKey(owner, peer))).first;
  return it->second;
}

std::size_t Network::shared_available(const NodeId& a, const NodeId& b) const {
  const KeyBuffer* ka = key_buffer(a, b);
  const KeyBuffer* kb = key_buffer(b, a);
  if (!ka || !kb) return 0;
  return std::min(ka->available(), kb->available());
}

SessionRecord Network::generate_direct_key(const NodeId& a, const NodeId& b, std::size_t n_pulses) {
  const LinkKey key(a, b);
  auto it = links_.find(key);
  if (it == links_.end() || it->second.state != LinkState::active) {
    throw Error(Errc::link_inactive, "no active link " + link_name(key));
  }
  const OpticalLink link = it->second;
  const std::uint64_t index = session_counter_[key]++;
  const std::string label = fmt::format("qkd/{}/{}/{}", key.first().value, key.second().value, index);
  RandomStream rng(seed_, label);
  EveConfig eve;
  if (auto e = eve_.find(key); e != eve_.end()) eve = e->second;

  SessionRecord rec;
  NodeId measuring = key.first();
  if (mode_ == Mode::p2p) {
    rec = run_bb84_session(link, n_pulses, eve, rng, params_.channel, params_.qkd);
  } else {
    // The server measures; between two servers the lower id takes that role.
    if (node(key.first()).role == NodeRole::client) measuring = key.second();
    rec = run_plugplay_session(link, n_pulses, eve, rng, params_.channel, params_.qkd);
  }

  SessionSummary s(key);
  s.time = queue_.now();
  s.index = index;
  s.stream_label = label;
  s.protocol = rec.protocol;
  s.n_pulses = rec.n_pulses;
  s.detections = rec.detections;
  s.sifted_len = rec.sifted_len;
  s.qber_sample_size = rec.qber_sample_size;
  s.qber = rec.qber;
  s.leak_bits = rec.reconciliation_leak_bits;
  s.final_len = rec.final_key.size();
  s.aborted = rec.aborted;
  s.abort_reason = rec.abort_reason;
  s.key_fingerprint = fingerprint(rec.final_key);
  sessions_.push_back(s);

  log_.append(queue_.now(), "qkd", measuring.value,
              fmt::format("link={} session={} protocol={} pulses={} detections={} sifted={} "
                          "sample={} qber={} leak={} final={} aborted={} reason={} fp={:016x}",
                          link_name(key), index, to_string(rec.protocol), rec.n_pulses,
                          rec.detections, rec.sifted_len, rec.qber_sample_size,
                          format_float(rec.qber), rec.reconciliation_leak_bits,
                          rec.final_key.size(), rec.aborted ? 1 : 0, to_string(rec.abort_reason),
                          s.key_fingerprint));

  if (!rec.aborted) {
    for (const auto& [owner, peer] : {std::pair{a, b}, std::pair{b, a}}) {
      KeyBuffer& kb = buffer(owner, peer);
      const std::size_t offset = kb.size();
      kb.append(owner == measuring ? rec.receiver_final_key : rec.final_key);
      log_.append(queue_.now(), "key_append", owner.value,
                  fmt::format("peer={} offset={} len={}", peer.value, offset, rec.final_key.size()));
    }
  }
  return rec;
}

void Network::log_consume(const NodeId& owner, const NodeId& peer, std::size_t offset,
                          std::size_t len, std::uint64_t message_id) {
  log_.append(queue_.now(), "key_consume", owner.value,
              fmt::format("peer={} offset={} len={} msg={}", peer.value, offset, len, message_id));
}

RelaySetup Network::relay_key_setup(const std::vector<NodeId>& path, std::size_t block_len) {
  if (path.size() < 3) throw Error(Errc::invalid_argument, "relay path needs at least 3 nodes");
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (shared_available(path[i], path[i + 1]) < block_len) {
      throw Error(Errc::key_starvation,
                  fmt::format("hop {}-{} has {} of {} key bits", path[i].value, path[i + 1].value,
                              shared_available(path[i], path[i + 1]), block_len));
    }
  }

  const std::uint64_t msg = current_message_id_;
  // hop_copies[i] = {path[i]'s copy, path[i+1]'s copy} of the hop-i key.
  std::vector<std::pair<BitString, BitString>> hop_copies;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    KeyBuffer& left = buffer(path[i], path[i + 1]);
    KeyBuffer& right = buffer(path[i + 1], path[i]);
    const std::size_t lo = left.consumed_offset();
    const std::size_t ro = right.consumed_offset();
    hop_copies.emplace_back(left.consume(block_len), right.consume(block_len));
    log_consume(path[i], path[i + 1], lo, block_len, msg);
    log_consume(path[i + 1], path[i], ro, block_len, msg);
    if (hop_copies.back().first != hop_copies.back().second) {
      throw Error(Errc::invariant_violation, "key copies diverge on hop " + path[i].value);
    }
  }

  const NodeId& dst = path.back();
  for (std::size_t j = 1; j + 1 < path.size(); ++j) {
    // Relay j holds the right copy of hop j-1 and the left copy of hop j; it
    // publishes their XOR and keeps neither.
    RelayXor rx{msg, path[j], dst, j, xor_bits(hop_copies[j - 1].second, hop_copies[j].first)};
    bus_.broadcast(path[j], rx, fmt::format("msg={} position={} len={}", msg, j, block_len));
  }

  RelaySetup out;
  out.ticket.path = path;
  out.ticket.block_len = block_len;
  auto& inbox = mutable_node(dst).relay_inbox;
  if (auto it = inbox.find(msg); it != inbox.end()) {
    std::sort(it->second.begin(), it->second.end(),
              [](const RelayXor& x, const RelayXor& y) { return x.position < y.position; });
    for (auto& rx : it->second) out.ticket.broadcasts.push_back({rx.relay, std::move(rx.block)});
    inbox.erase(it);
  }
  out.sender_key = std::move(hop_copies.front().first);
  out.receiver_key = std::move(hop_copies.back().second);
  return out;
}

std::vector<NodeId> Network::route(const NodeId& src, const NodeId& dst) const {
  RelayFilter filter;
  if (mode_ == Mode::cs) {
    filter = [this](const NodeId& id) { return node(id).role == NodeRole::server; };
  }
  return find_path(node(src).table, src, dst, filter);
}

void Network::set_eve(const NodeId& a, const NodeId& b, EveConfig eve) {
  const LinkKey key(a, b);
  node(a);
  node(b);
  if (eve.mode == EveMode::none) {
    eve_.erase(key);
  } else {
    eve_[key] = eve;
  }
  const char* mode = eve.mode == EveMode::none             ? "off"
                     : eve.mode == EveMode::intercept_resend ? "intercept_resend"
                                                            : "trojan_probe";
  log_.append(queue_.now(), "eve", "-", fmt::format("link={} mode={}", link_name(key), mode));
}

DeliveryRecord Network::finish(DeliveryRecord rec) {
  std::string extra;
  if (rec.failing_hop) extra += " hop=" + link_name(*rec.failing_hop);
  if (rec.abort_reason != AbortReason::none) {
    extra += fmt::format(" reason={}", to_string(rec.abort_reason));
  }
  log_.append(queue_.now(), "deliver", rec.src.value,
              fmt::format("msg={} dst={} outcome={} path={} bits={} consumed={} verified={}{}",
                          rec.message_id, rec.dst.value, to_string(rec.outcome),
                          path_name(rec.path), rec.message_bits, rec.key_bits_consumed,
                          rec.plaintext_verified ? 1 : 0, extra));
  deliveries_.push_back(rec);
  current_message_id_ = 0;
  return rec;
}

DeliveryRecord Network::send_message(const NodeId& src, const NodeId& dst, const BitString& message) {
  node(src);
  node(dst);
  if (src == dst) throw Error(Errc::invalid_argument, "sender equals receiver");

  DeliveryRecord rec;
  rec.message_id = next_message_id_++;
  current_message_id_ = rec.message_id;
  rec.time = queue_.now();
  rec.src = src;
  rec.dst = dst;
  rec.message_bits = message.size();

  if (!bus_.is_deployed(src) || !bus_.is_deployed(dst)) {
    rec.outcome = DeliveryOutcome::not_deployed;
    return finish(std::move(rec));
  }
  try {
    rec.path = route(src, dst);
  } catch (const Error& e) {
    if (e.code() != Errc::no_route) throw;
    rec.outcome = DeliveryOutcome::no_route;
    return finish(std::move(rec));
  }

  // Top up every hop first so a failure leaves all pools untouched.
  for (std::size_t i = 0; i + 1 < rec.path.size(); ++i) {
    const NodeId& a = rec.path[i];
    const NodeId& b = rec.path[i + 1];
    std::size_t sessions = 0;
    while (shared_available(a, b) < message.size()) {
      if (sessions == params_.max_sessions_per_hop) {
        rec.outcome = DeliveryOutcome::key_starvation;
        rec.failing_hop = LinkKey(a, b);
        return finish(std::move(rec));
      }
      ++sessions;
      SessionRecord s = generate_direct_key(a, b, params_.pulses_per_session);
      if (s.aborted) {
        rec.outcome = DeliveryOutcome::qkd_abort;
        rec.failing_hop = LinkKey(a, b);
        rec.abort_reason = s.abort_reason;
        return finish(std::move(rec));
      }
    }
  }

  BitString delivered;
  if (rec.path.size() == 2) {
    KeyBuffer& sk = buffer(src, dst);
    KeyBuffer& rk = buffer(dst, src);
    const std::size_t so = sk.consumed_offset();
    const std::size_t ro = rk.consumed_offset();
    const BitString cipher = encrypt(message, sk, so);
    log_consume(src, dst, so, message.size(), rec.message_id);
    delivered = decrypt(cipher, rk, ro);
    log_consume(dst, src, ro, message.size(), rec.message_id);
  } else {
    RelaySetup setup = relay_key_setup(rec.path, message.size());
    const BitString cipher = otp(message, setup.sender_key);
    delivered = decrypt_relay(cipher, setup.receiver_key, setup.ticket);
  }
  if (delivered != message) {
    throw Error(Errc::invariant_violation,
                fmt::format("message {} decrypted incorrectly", rec.message_id));
  }
  rec.plaintext_verified = true;
  rec.key_bits_consumed = message.size() * (rec.path.size() - 1);
  rec.outcome = DeliveryOutcome::delivered;
  return finish(std::move(rec));
}

void Network::check_invariants() const {
  if (verified_epoch_ != topology_epoch_) {
    check_topology();
    verified_epoch_ = topology_epoch_;
  }
  for (const auto& [id, n] : nodes_) {
    for (const auto& [peer, kb] : n.keys) {
      const KeyBuffer* other = key_buffer(peer, id);
      if (!other || other->size() != kb.size() ||
          other->consumed_offset() != kb.consumed_offset()) {
        throw Error(Errc::invariant_violation,
                    "key pools of " + id.value + " and " + peer.value + " disagree");
      }
    }
  }
}

void Network::check_topology() const {
  const std::set<LinkKey> active = active_links();
  const NodeState* reference = nullptr;
  for (const auto& id : bus_.deployed()) {
    const NodeState& n = node(id);
    const bool same = n.table.links.size() == active.size() &&
                      std::equal(n.table.links.begin(), n.table.links.end(), active.begin(),
                                 [](const auto& entry, const LinkKey& k) { return entry.first == k; });
    if (!same) {
      throw Error(Errc::invariant_violation,
                  "routing table of " + id.value + " differs from the active link set");
    }
    if (reference && (reference->table.links != n.table.links ||
                      reference->table.version != n.table.version)) {
      throw Error(Errc::invariant_violation,
                  "routing tables of " + reference->id.value + " and " + id.value + " differ");
    }
    reference = &n;
  }
  for (const auto& k : active) {
    if (mode_ == Mode::cs && node(k.first()).role == NodeRole::client &&
        node(k.second()).role == NodeRole::client) {
      throw Error(Errc::invariant_violation, "client-client link " + link_name(k));
    }
  }
}

}  // namespace soqn
