#include "soqn/bits.hpp"

#include "soqn/error.hpp"

namespace soqn {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::duplicate_node: return "duplicate_node";
    case Errc::unknown_node: return "unknown_node";
    case Errc::link_inactive: return "link_inactive";
    case Errc::no_route: return "no_route";
    case Errc::key_starvation: return "key_starvation";
    case Errc::key_reuse: return "key_reuse";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::missing_broadcast: return "missing_broadcast";
    case Errc::past_schedule: return "past_schedule";
    case Errc::undeployed_origin: return "undeployed_origin";
    case Errc::invariant_violation: return "invariant_violation";
  }
  return "unknown";
}

BitString xor_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::length_mismatch, "xor of " + std::to_string(a.size()) + " and " +
                                           std::to_string(b.size()) + " bits");
  }
  BitString out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

std::optional<BitString> bits_from_hex(std::string_view hex) {
  BitString out;
  out.reserve(hex.size() * 4);
  for (char c : hex) {
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      return std::nullopt;
    }
    for (int k = 3; k >= 0; --k) out.push_back(static_cast<std::uint8_t>((v >> k) & 1));
  }
  return out;
}

std::string bits_to_hex(std::span<const std::uint8_t> bits) {
  if (bits.size() % 4 != 0) {
    throw Error(Errc::invalid_argument, "bit length not a multiple of 4");
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bits.size() / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int v = (bits[i] << 3) | (bits[i + 1] << 2) | (bits[i + 2] << 1) | bits[i + 3];
    out.push_back(kDigits[v]);
  }
  return out;
}

BitString bits_from_string(std::string_view s) {
  BitString out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw Error(Errc::invalid_argument, "not a bit string");
    out.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return out;
}

std::string bits_to_string(std::span<const std::uint8_t> bits) {
  std::string out;
  out.reserve(bits.size());
  for (auto b : bits) out.push_back(b ? '1' : '0');
  return out;
}

std::uint64_t fingerprint(std::span<const std::uint8_t> bits) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bits) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  h ^= bits.size();
  h *= 0x100000001b3ULL;
  return h;
}

std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint64_t> words((bits.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) words[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return words;
}

}  // namespace soqn
