#include "soqn/random.hpp"

#include <stdexcept>

namespace soqn {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::string label)
    : seed_(seed),
      label_(std::move(label)),
      key_(mix64(mix64(seed + kGolden) ^ hash_label(label_))) {}

std::uint64_t RandomStream::next_u64() {
  ++position_;
  return mix64(key_ + position_ * kGolden);
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

std::uint8_t RandomStream::bit() { return static_cast<std::uint8_t>(next_u64() >> 63); }

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::below(0)");
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % n;
  }
}

RandomStream RandomStream::fork(std::string_view suffix) const {
  std::string child = label_;
  child.push_back('/');
  child.append(suffix);
  return RandomStream(seed_, std::move(child));
}

}  // namespace soqn
