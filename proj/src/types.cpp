#include "soqn/types.hpp"

#include "soqn/error.hpp"

namespace soqn {

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::peer: return "peer";
    case NodeRole::server: return "server";
    case NodeRole::client: return "client";
  }
  return "?";
}

const char* to_string(Mode mode) { return mode == Mode::p2p ? "p2p" : "cs"; }

const char* to_string(LinkState state) {
  switch (state) {
    case LinkState::acquiring: return "acquiring";
    case LinkState::active: return "active";
    case LinkState::torn_down: return "torn_down";
  }
  return "?";
}

LinkKey::LinkKey(NodeId a, NodeId b) {
  if (a == b) throw Error(Errc::invalid_argument, "link endpoints must differ: " + a.value);
  if (b < a) std::swap(a, b);
  a_ = std::move(a);
  b_ = std::move(b);
}

}  // namespace soqn
