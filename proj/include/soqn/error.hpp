#pragma once

#include <stdexcept>
#include <string>

namespace soqn {

enum class Errc {
  invalid_argument,
  duplicate_node,
  unknown_node,
  link_inactive,
  no_route,
  key_starvation,
  key_reuse,
  length_mismatch,
  missing_broadcast,
  past_schedule,
  undeployed_origin,
  invariant_violation,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace soqn
