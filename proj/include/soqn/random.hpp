#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace soqn {

/// Counter-based random stream keyed by (global seed, label).
///
/// Draw k of a stream is a pure function of (seed, label, k), so streams with
/// different labels never perturb each other and a stream can be replayed from
/// any position. The mixing function is SplitMix64; no std distributions are
/// used so results are identical across standard libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string label);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  bool bernoulli(double p);
  std::uint8_t bit();
  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Independent stream labelled "<label>/<suffix>" under the same seed.
  RandomStream fork(std::string_view suffix) const;

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& label() const noexcept { return label_; }
  std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t position_ = 0;
};

}  // namespace soqn
