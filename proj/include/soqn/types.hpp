#pragma once

#include <compare>
#include <ostream>
#include <string>
#include <utility>

namespace soqn {

struct NodeId {
  std::string value;

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const NodeId& id) { return os << id.value; }

enum class NodeRole { peer, server, client };
enum class Mode { p2p, cs };

const char* to_string(NodeRole role);
const char* to_string(Mode mode);

/// Unordered node pair, stored with first < second.
class LinkKey {
 public:
  LinkKey(NodeId a, NodeId b);

  const NodeId& first() const noexcept { return a_; }
  const NodeId& second() const noexcept { return b_; }
  bool contains(const NodeId& id) const { return a_ == id || b_ == id; }
  const NodeId& other(const NodeId& id) const { return a_ == id ? b_ : a_; }

  auto operator<=>(const LinkKey&) const = default;
  bool operator==(const LinkKey&) const = default;

 private:
  NodeId a_;
  NodeId b_;
};

enum class LinkState { acquiring, active, torn_down };

const char* to_string(LinkState state);

struct OpticalLink {
  LinkKey endpoints;
  double distance_km = 0.0;
  double loss_db = 0.0;
  double acquired_at = 0.0;
  LinkState state = LinkState::acquiring;
};

}  // namespace soqn
