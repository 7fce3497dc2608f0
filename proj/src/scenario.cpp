#include "soqn/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "soqn/error.hpp"

namespace soqn {
namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size() || line[i] == '#') break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' &&
           line[i] != '#') {
      ++i;
    }
    out.push_back(Token{line.substr(start, i - start), start + 1});
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool valid_id(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
}

/// Thrown internally and converted to a ParseError at the top level.
struct Failure {
  ParseError error;
};

[[noreturn]] void fail(ParseError::Kind kind, std::size_t line, std::size_t column,
                       std::string message) {
  throw Failure{ParseError{kind, line, column, std::move(message)}};
}

class Parser {
 public:
  Scenario run(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      line_ = line_no;
      parse_line(tokenize(text.substr(pos, end - pos)));
      if (end == text.size()) break;
      pos = end + 1;
    }
    finish();
    return std::move(s_);
  }

 private:
  [[noreturn]] void syntax(const Token& t, std::string msg) {
    fail(ParseError::Kind::syntax, line_, t.column, std::move(msg));
  }
  [[noreturn]] void semantic(const Token& t, std::string msg) {
    fail(ParseError::Kind::semantic, line_, t.column, std::move(msg));
  }

  void expect_count(const std::vector<Token>& toks, std::size_t n, std::string_view usage) {
    if (toks.size() < n) {
      const std::size_t col = toks.back().column + toks.back().text.size();
      fail(ParseError::Kind::syntax, line_, col, fmt::format("expected: {}", usage));
    }
    if (toks.size() > n) syntax(toks[n], fmt::format("unexpected token; expected: {}", usage));
  }

  double number(const Token& t, std::string_view what) {
    auto v = parse_double(t.text);
    if (!v) syntax(t, fmt::format("invalid {} '{}'", what, t.text));
    return *v;
  }

  double time_value(const Token& t) {
    const double v = number(t, "time");
    if (v < 0.0) semantic(t, "negative time");
    return v;
  }

  NodeId node_ref(const Token& t) {
    if (!valid_id(t.text)) syntax(t, fmt::format("invalid node id '{}'", t.text));
    refs_.push_back({NodeId{std::string(t.text)}, line_, t.column});
    return NodeId{std::string(t.text)};
  }

  GeoPosition position(const Token& lat, const Token& lon, const Token& alt) {
    const double la = number(lat, "latitude");
    const double lo = number(lon, "longitude");
    const double al = number(alt, "altitude");
    if (la < -90.0 || la > 90.0) semantic(lat, "latitude out of [-90, 90]");
    if (al < -500.0) semantic(alt, "altitude below -500 m");
    return GeoPosition::make(la, lo, al);
  }

  std::string_view keyed(const Token& t, std::string_view prefix, std::string_view usage) {
    if (t.text.substr(0, prefix.size()) != prefix) {
      syntax(t, fmt::format("expected {}...; usage: {}", prefix, usage));
    }
    return t.text.substr(prefix.size());
  }

  void parse_line(const std::vector<Token>& toks) {
    if (toks.empty()) return;
    const Token& head = toks[0];
    if (head.text == "mode") {
      expect_count(toks, 2, "mode p2p|cs");
      if (mode_line_) semantic(head, "duplicate mode directive");
      if (toks[1].text == "p2p") {
        s_.mode = Mode::p2p;
      } else if (toks[1].text == "cs") {
        s_.mode = Mode::cs;
      } else {
        syntax(toks[1], "mode must be p2p or cs");
      }
      mode_line_ = line_;
    } else if (head.text == "seed") {
      expect_count(toks, 2, "seed <u64>");
      if (seed_seen_) semantic(head, "duplicate seed directive");
      auto v = parse_u64(toks[1].text);
      if (!v) syntax(toks[1], "seed must be an unsigned 64-bit integer");
      s_.seed = *v;
      seed_seen_ = true;
    } else if (head.text == "param") {
      expect_count(toks, 3, "param <name> <value>");
      const std::string name(toks[1].text);
      const double v = number(toks[2], "parameter value");
      NetworkParams probe;
      try {
        if (!set_param(probe, name, v)) semantic(toks[1], "unknown parameter '" + name + "'");
      } catch (const Error& e) {
        semantic(toks[2], e.what());
      }
      if (s_.params.contains(name)) semantic(toks[1], "duplicate parameter '" + name + "'");
      s_.params[name] = v;
    } else if (head.text == "node") {
      parse_node(toks);
    } else if (head.text == "at") {
      parse_event(toks);
    } else {
      syntax(head, fmt::format("unknown directive '{}'", head.text));
    }
  }

  void parse_node(const std::vector<Token>& toks) {
    static constexpr std::string_view usage =
        "node <id> peer|server|client <lat_deg> <lon_deg> <alt_m> [deploy=<t_s>]";
    if (toks.size() != 6 && toks.size() != 7) expect_count(toks, toks.size() < 6 ? 6 : 7, usage);
    if (!valid_id(toks[1].text)) syntax(toks[1], fmt::format("invalid node id '{}'", toks[1].text));
    ScenarioNode n;
    n.spec.id = NodeId{std::string(toks[1].text)};
    if (toks[2].text == "peer") {
      n.spec.role = NodeRole::peer;
    } else if (toks[2].text == "server") {
      n.spec.role = NodeRole::server;
    } else if (toks[2].text == "client") {
      n.spec.role = NodeRole::client;
    } else {
      syntax(toks[2], "role must be peer, server or client");
    }
    n.spec.position = position(toks[3], toks[4], toks[5]);
    if (toks.size() == 7) {
      n.deploy_at = time_value(Token{keyed(toks[6], "deploy=", usage), toks[6].column});
    }
    for (const auto& existing : s_.nodes) {
      if (existing.spec.id == n.spec.id) semantic(toks[1], "duplicate node '" + n.spec.id.value + "'");
    }
    node_lines_.push_back({line_, toks[2].column});
    s_.nodes.push_back(std::move(n));
  }

  void parse_event(const std::vector<Token>& toks) {
    if (toks.size() < 3) expect_count(toks, 3, "at <t_s> <event> ...");
    ScenarioEvent ev;
    ev.at = time_value(toks[1]);
    const Token& kind = toks[2];
    if (kind.text == "join") {
      expect_count(toks, 4, "at <t_s> join <id>");
      ev.payload = JoinPayload{node_ref(toks[3])};
      joins_.push_back({std::get<JoinPayload>(ev.payload).id, line_, toks[3].column});
    } else if (kind.text == "move") {
      expect_count(toks, 7, "at <t_s> move <id> <lat> <lon> <alt>");
      ev.payload = MovePayload{node_ref(toks[3]), position(toks[4], toks[5], toks[6])};
    } else if (kind.text == "qkd") {
      static constexpr std::string_view usage = "at <t_s> qkd <idA> <idB> pulses=<n>";
      expect_count(toks, 6, usage);
      auto n = parse_u64(keyed(toks[5], "pulses=", usage));
      if (!n) syntax(toks[5], "pulses must be an unsigned integer");
      if (*n == 0) semantic(toks[5], "pulses must be at least 1");
      QkdPayload p{node_ref(toks[3]), node_ref(toks[4]), static_cast<std::size_t>(*n)};
      if (p.a == p.b) semantic(toks[4], "qkd endpoints must differ");
      ev.payload = std::move(p);
    } else if (kind.text == "send") {
      static constexpr std::string_view usage = "at <t_s> send <src> <dst> hex:<hexstring>";
      expect_count(toks, 6, usage);
      auto bits = bits_from_hex(keyed(toks[5], "hex:", usage));
      if (!bits) syntax(toks[5], "invalid hex message");
      SendPayload p{node_ref(toks[3]), node_ref(toks[4]), std::move(*bits)};
      if (p.src == p.dst) semantic(toks[4], "send endpoints must differ");
      ev.payload = std::move(p);
    } else if (kind.text == "eve") {
      expect_count(toks, 7, "at <t_s> eve <idA> <idB> intercept_resend on|off");
      if (toks[5].text != "intercept_resend") syntax(toks[5], "eve mode must be intercept_resend");
      bool on = false;
      if (toks[6].text == "on") {
        on = true;
      } else if (toks[6].text != "off") {
        syntax(toks[6], "expected on or off");
      }
      EvePayload p{node_ref(toks[3]), node_ref(toks[4]), on};
      if (p.a == p.b) semantic(toks[4], "eve endpoints must differ");
      ev.payload = std::move(p);
    } else {
      syntax(kind, fmt::format("unknown event '{}'", kind.text));
    }
    s_.events.push_back(std::move(ev));
  }

  void finish() {
    if (!mode_line_) fail(ParseError::Kind::semantic, 1, 1, "missing mode directive");
    for (std::size_t i = 0; i < s_.nodes.size(); ++i) {
      const auto& n = s_.nodes[i];
      const bool peer = n.spec.role == NodeRole::peer;
      if ((s_.mode == Mode::p2p) != peer) {
        fail(ParseError::Kind::semantic, node_lines_[i].first, node_lines_[i].second,
             fmt::format("role {} not allowed in {} mode", to_string(n.spec.role),
                         to_string(s_.mode)));
      }
    }
    auto find = [this](const NodeId& id) -> const ScenarioNode* {
      for (const auto& n : s_.nodes) {
        if (n.spec.id == id) return &n;
      }
      return nullptr;
    };
    for (const auto& r : refs_) {
      if (!find(r.id)) {
        fail(ParseError::Kind::semantic, r.line, r.column, "unknown node '" + r.id.value + "'");
      }
    }
    std::set<NodeId> joined;
    for (const auto& j : joins_) {
      if (find(j.id)->deploy_at) {
        fail(ParseError::Kind::semantic, j.line, j.column,
             "node '" + j.id.value + "' has both deploy= and a join event");
      }
      if (!joined.insert(j.id).second) {
        fail(ParseError::Kind::semantic, j.line, j.column,
             "node '" + j.id.value + "' joins more than once");
      }
    }
  }

  struct Ref {
    NodeId id;
    std::size_t line;
    std::size_t column;
  };

  Scenario s_;
  std::size_t line_ = 0;
  std::size_t mode_line_ = 0;
  bool seed_seen_ = false;
  std::vector<std::pair<std::size_t, std::size_t>> node_lines_;
  std::vector<Ref> refs_;
  std::vector<Ref> joins_;
};

std::string exact(double v) {
  if (v == 0.0) return "0";
  return fmt::format("{}", v);  // shortest representation that round-trips
}

}  // namespace

std::string ParseError::to_string() const {
  return fmt::format("{}:{}: {} error: {}", line, column,
                     kind == Kind::syntax ? "syntax" : "semantic", message);
}

ParseOutcome parse_scenario(std::string_view text) {
  try {
    return Parser().run(text);
  } catch (const Failure& f) {
    return f.error;
  } catch (const std::exception& e) {
    return ParseError{ParseError::Kind::syntax, 0, 0, e.what()};
  }
}

std::string format_scenario(const Scenario& s) {
  std::string out;
  out += fmt::format("mode {}\nseed {}\n", to_string(s.mode), s.seed);
  for (const auto& [name, value] : s.params) out += fmt::format("param {} {}\n", name, exact(value));
  for (const auto& n : s.nodes) {
    out += fmt::format("node {} {} {} {} {}", n.spec.id.value, to_string(n.spec.role),
                       exact(n.spec.position.latitude_deg), exact(n.spec.position.longitude_deg),
                       exact(n.spec.position.altitude_m));
    if (n.deploy_at) out += " deploy=" + exact(*n.deploy_at);
    out.push_back('\n');
  }
  for (const auto& ev : s.events) {
    out += "at " + exact(ev.at) + " ";
    std::visit(
        [&out](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, JoinPayload>) {
            out += "join " + p.id.value;
          } else if constexpr (std::is_same_v<T, MovePayload>) {
            out += fmt::format("move {} {} {} {}", p.id.value, exact(p.position.latitude_deg),
                               exact(p.position.longitude_deg), exact(p.position.altitude_m));
          } else if constexpr (std::is_same_v<T, QkdPayload>) {
            out += fmt::format("qkd {} {} pulses={}", p.a.value, p.b.value, p.pulses);
          } else if constexpr (std::is_same_v<T, SendPayload>) {
            out += fmt::format("send {} {} hex:{}", p.src.value, p.dst.value,
                               bits_to_hex(p.message));
          } else if constexpr (std::is_same_v<T, EvePayload>) {
            out += fmt::format("eve {} {} intercept_resend {}", p.a.value, p.b.value,
                               p.on ? "on" : "off");
          } else {
            // Not expressible in the grammar; only produced programmatically.
            throw Error(Errc::invalid_argument, "event kind has no scenario syntax");
          }
        },
        ev.payload);
    out.push_back('\n');
  }
  return out;
}

NetworkParams resolve_params(const Scenario& s, const std::map<std::string, double>& overrides) {
  NetworkParams p;
  for (const auto* source : {&s.params, &overrides}) {
    for (const auto& [name, value] : *source) {
      if (!set_param(p, name, value)) throw Error(Errc::invalid_argument, "unknown parameter " + name);
    }
  }
  return p;
}

void load_scenario(Simulator& sim, const Scenario& s) {
  std::set<NodeId> joined;
  for (const auto& ev : s.events) {
    if (const auto* j = std::get_if<JoinPayload>(&ev.payload)) joined.insert(j->id);
  }
  for (const auto& n : s.nodes) sim.declare(n.spec);
  for (const auto& n : s.nodes) {
    if (joined.contains(n.spec.id)) continue;
    sim.schedule(ScenarioEvent{n.deploy_at.value_or(0.0), DeployPayload{n.spec.id}});
  }
  for (const auto& ev : s.events) sim.schedule(ev);
}

double last_event_time(const Scenario& s) {
  double t = 0.0;
  for (const auto& n : s.nodes) t = std::max(t, n.deploy_at.value_or(0.0));
  for (const auto& ev : s.events) t = std::max(t, ev.at);
  return t;
}

}  // namespace soqn
