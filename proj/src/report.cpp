#include "soqn/report.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "soqn/error.hpp"

namespace soqn {
namespace {

std::map<std::string, std::string> fields(const std::string& details) {
  std::map<std::string, std::string> out;
  std::istringstream in(details);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::size_t as_size(const std::map<std::string, std::string>& f, const std::string& key) {
  auto it = f.find(key);
  if (it == f.end()) throw Error(Errc::invalid_argument, "log record lacks " + key);
  return static_cast<std::size_t>(std::stoull(it->second));
}

/// Rounded to six significant digits so JSON output is byte-stable.
double six(double v) { return std::stod(format_float(v)); }

std::string link_name(const LinkKey& k) { return k.first().value + "-" + k.second().value; }

std::string path_name(const std::vector<NodeId>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out.push_back('>');
    out += path[i].value;
  }
  return out.empty() ? "-" : out;
}

struct LinkRow {
  explicit LinkRow(LinkKey k) : key(std::move(k)) {}

  LinkKey key;
  std::string state = "none";
  double distance_km = 0.0;
  double loss_db = 0.0;
  std::size_t sessions = 0;
  std::size_t aborted = 0;
  std::vector<double> qber_history;
  std::size_t generated = 0;
  std::size_t consumed = 0;
};

std::vector<LinkRow> link_rows(const Network& net) {
  std::map<LinkKey, LinkRow> rows;
  auto row = [&rows](const LinkKey& k) -> LinkRow& {
    return rows.try_emplace(k, k).first->second;
  };
  for (const auto& [k, l] : net.links()) {
    LinkRow& r = row(k);
    r.state = to_string(l.state);
    r.distance_km = l.distance_km;
    r.loss_db = l.loss_db;
  }
  for (const auto& s : net.sessions()) {
    LinkRow& r = row(s.link);
    ++r.sessions;
    if (s.aborted) ++r.aborted;
    if (s.qber_sample_size > 0) r.qber_history.push_back(s.qber);
  }
  for (const auto& id : net.node_ids()) {
    for (const auto& [peer, kb] : net.node(id).keys) {
      if (!(id < peer)) continue;
      LinkRow& r = row(kb.pair());
      r.generated = kb.size();
      r.consumed = kb.consumed_offset();
    }
  }
  std::vector<LinkRow> out;
  for (auto& [_, r] : rows) out.push_back(std::move(r));
  return out;
}

std::string join_floats(const std::vector<double>& v) {
  if (v.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += format_float(v[i]);
  }
  return out;
}

}  // namespace

KeyAudit audit_key_usage(const EventLog& log) {
  KeyAudit audit;
  std::map<std::pair<std::string, std::string>, std::size_t> cursor;
  std::map<std::size_t, std::size_t> consumes_by_msg;
  auto violate = [&audit](std::string msg) {
    audit.ok = false;
    audit.violations.push_back(std::move(msg));
  };

  for (const auto& r : log.records()) {
    if (r.kind == "key_append") {
      const auto f = fields(r.details);
      auto& u = audit.usage[{r.origin, f.at("peer")}];
      if (as_size(f, "offset") != u.generated) {
        violate(fmt::format("seq {}: append at {} but pool has {}", r.sequence,
                            as_size(f, "offset"), u.generated));
      }
      u.generated += as_size(f, "len");
    } else if (r.kind == "key_consume") {
      const auto f = fields(r.details);
      const std::pair<std::string, std::string> key{r.origin, f.at("peer")};
      auto& u = audit.usage[key];
      const std::size_t offset = as_size(f, "offset");
      const std::size_t len = as_size(f, "len");
      std::size_t& next = cursor[key];
      if (offset < next) {
        violate(fmt::format("seq {}: {}->{} bits [{}, {}) reused", r.sequence, key.first,
                            key.second, offset, offset + len));
      } else if (offset > next) {
        violate(fmt::format("seq {}: {}->{} skipped bits [{}, {})", r.sequence, key.first,
                            key.second, next, offset));
      }
      if (offset + len > u.generated) {
        violate(fmt::format("seq {}: {}->{} consumed beyond generated key", r.sequence,
                            key.first, key.second));
      }
      next = std::max(next, offset + len);
      u.consumed += len;
      consumes_by_msg[as_size(f, "msg")] += len;
    } else if (r.kind == "deliver") {
      const auto f = fields(r.details);
      if (f.at("outcome") != "delivered") {
        ++audit.failed_sends;
        const std::size_t msg = as_size(f, "msg");
        if (consumes_by_msg.contains(msg)) {
          violate(fmt::format("failed message {} consumed {} key bits", msg,
                              consumes_by_msg[msg]));
        }
      }
    }
  }
  for (const auto& [key, u] : audit.usage) {
    auto mirror = audit.usage.find({key.second, key.first});
    if (mirror == audit.usage.end() || mirror->second != u) {
      violate(fmt::format("pools {}->{} and {}->{} disagree", key.first, key.second, key.second,
                          key.first));
    }
  }
  return audit;
}

std::string render_report_text(const Simulator& sim, const Scenario& scenario, double end_time,
                               const KeyAudit& audit) {
  const Network& net = sim.network();
  const SimSummary sum = sim.summary();
  std::string out;
  out += "SOQN simulation report\n";
  out += fmt::format("mode {}  seed {}  end_time {}\n", to_string(scenario.mode), net.seed(),
                     format_float(end_time));
  out += fmt::format(
      "events {}  errors {}  active_links {}  sessions {}  aborted {}  deliveries {}  delivered "
      "{}\n",
      sum.events, sum.errors, sum.links, sum.sessions, sum.sessions_aborted, sum.deliveries,
      sum.delivered);
  out += fmt::format("key audit: {}\n", audit.ok ? "ok" : "FAILED");
  for (const auto& v : audit.violations) out += "  " + v + "\n";

  out += "\nLINKS\n";
  out += fmt::format("{:<24} {:<10} {:>12} {:>10} {:>9} {:>8} {:>10} {:>10}  {}\n", "link",
                     "state", "distance_km", "loss_db", "sessions", "aborted", "generated",
                     "consumed", "qber_history");
  for (const auto& r : link_rows(net)) {
    out += fmt::format("{:<24} {:<10} {:>12} {:>10} {:>9} {:>8} {:>10} {:>10}  {}\n",
                       link_name(r.key), r.state, format_float(r.distance_km),
                       format_float(r.loss_db), r.sessions, r.aborted, r.generated, r.consumed,
                       join_floats(r.qber_history));
  }

  out += "\nDELIVERIES\n";
  out += fmt::format("{:>6} {:>10} {:<10} {:<10} {:<15} {:>6} {:>9}  {}\n", "msg", "time", "src",
                     "dst", "outcome", "bits", "consumed", "path");
  for (const auto& d : net.deliveries()) {
    std::string path = path_name(d.path);
    if (d.failing_hop) path += " (hop " + link_name(*d.failing_hop) + ")";
    out += fmt::format("{:>6} {:>10} {:<10} {:<10} {:<15} {:>6} {:>9}  {}\n", d.message_id,
                       format_float(d.time), d.src.value, d.dst.value, to_string(d.outcome),
                       d.message_bits, d.key_bits_consumed, path);
  }

  out += "\nROUTING SNAPSHOTS\n";
  for (const auto& s : sim.snapshots()) {
    out += fmt::format("t={} version={} links={}:", format_float(s.time), s.version,
                       s.links.size());
    for (const auto& [k, _] : s.links) out += " " + link_name(k);
    out.push_back('\n');
  }
  return out;
}

std::string render_report_records(const Simulator& sim, const Scenario& scenario,
                                  double end_time, const KeyAudit& audit) {
  using nlohmann::ordered_json;
  const Network& net = sim.network();
  const SimSummary sum = sim.summary();
  std::string out;
  auto emit = [&out](const ordered_json& j) {
    out += j.dump();
    out.push_back('\n');
  };

  emit(ordered_json{{"type", "summary"},
                    {"mode", to_string(scenario.mode)},
                    {"seed", net.seed()},
                    {"end_time", six(end_time)},
                    {"events", sum.events},
                    {"errors", sum.errors},
                    {"active_links", sum.links},
                    {"sessions", sum.sessions},
                    {"sessions_aborted", sum.sessions_aborted},
                    {"deliveries", sum.deliveries},
                    {"delivered", sum.delivered},
                    {"key_audit_ok", audit.ok}});
  for (const auto& r : link_rows(net)) {
    ordered_json qh = ordered_json::array();
    for (double q : r.qber_history) qh.push_back(six(q));
    emit(ordered_json{{"type", "link"},
                      {"a", r.key.first().value},
                      {"b", r.key.second().value},
                      {"state", r.state},
                      {"distance_km", six(r.distance_km)},
                      {"loss_db", six(r.loss_db)},
                      {"sessions", r.sessions},
                      {"aborted", r.aborted},
                      {"qber_history", qh},
                      {"key_generated", r.generated},
                      {"key_consumed", r.consumed}});
  }
  for (const auto& d : net.deliveries()) {
    ordered_json path = ordered_json::array();
    for (const auto& n : d.path) path.push_back(n.value);
    ordered_json j{{"type", "delivery"},
                   {"msg", d.message_id},
                   {"time", six(d.time)},
                   {"src", d.src.value},
                   {"dst", d.dst.value},
                   {"outcome", to_string(d.outcome)},
                   {"path", path},
                   {"bits", d.message_bits},
                   {"key_consumed", d.key_bits_consumed},
                   {"verified", d.plaintext_verified}};
    if (d.failing_hop) j["failing_hop"] = link_name(*d.failing_hop);
    if (d.abort_reason != AbortReason::none) j["abort_reason"] = to_string(d.abort_reason);
    emit(j);
  }
  for (const auto& s : sim.snapshots()) {
    ordered_json links = ordered_json::array();
    for (const auto& [k, _] : s.links) links.push_back(ordered_json::array({k.first().value, k.second().value}));
    emit(ordered_json{{"type", "snapshot"}, {"time", six(s.time)}, {"version", s.version},
                      {"links", links}});
  }
  return out;
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  RunResult result;
  NetworkParams params;
  try {
    params = resolve_params(scenario, options.param_overrides);
  } catch (const Error& e) {
    result.exit_code = kExitParseError;
    result.diagnostics.push_back(e.what());
    return result;
  }
  const std::uint64_t seed = options.seed.value_or(scenario.seed);
  Simulator sim(scenario.mode, params, seed);
  const double end_time = options.until.value_or(last_event_time(scenario));

  try {
    load_scenario(sim, scenario);
    for (double t : options.snapshots) sim.snapshot_at(t);
    result.summary = sim.run_until(end_time);
  } catch (const Error& e) {
    if (e.code() != Errc::invariant_violation && e.code() != Errc::past_schedule) throw;
    result.exit_code = e.code() == Errc::invariant_violation ? kExitInvariantViolation
                                                             : kExitParseError;
    result.diagnostics.push_back(e.what());
    result.event_log = sim.log().to_text();
    return result;
  }
  // Final snapshot is always part of the report.
  sim.snapshot_at(sim.now());
  sim.run_until(sim.now());

  KeyAudit audit = audit_key_usage(sim.log());
  for (const auto& row : link_rows(sim.network())) {
    const auto it = audit.usage.find({row.key.first().value, row.key.second().value});
    const PairUsage logged = it == audit.usage.end() ? PairUsage{} : it->second;
    if (row.generated < row.consumed || logged != PairUsage{row.generated, row.consumed}) {
      audit.ok = false;
      audit.violations.push_back("report key accounting for " + link_name(row.key) +
                                 " does not match the event log");
    }
  }

  result.summary = sim.summary();
  result.event_log = sim.log().to_text();
  result.report_text = render_report_text(sim, scenario, end_time, audit);
  result.report_records = render_report_records(sim, scenario, end_time, audit);
  for (const auto& e : sim.errors()) result.diagnostics.push_back(e);

  if (!audit.ok) {
    result.exit_code = kExitInvariantViolation;
    for (const auto& v : audit.violations) result.diagnostics.push_back(v);
  } else if (options.strict && result.summary.delivered != result.summary.deliveries) {
    result.exit_code = kExitDeliveryFailure;
    result.diagnostics.push_back(fmt::format("{} of {} messages not delivered",
                                             result.summary.deliveries - result.summary.delivered,
                                             result.summary.deliveries));
  }
  return result;
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&dir](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(Errc::invalid_argument, "cannot write " + (dir / name).string());
    f << text;
  };
  write("report.txt", result.report_text);
  write("report.jsonl", result.report_records);
  write("events.log", result.event_log);
}

}  // namespace soqn
