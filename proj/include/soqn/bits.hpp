#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace soqn {

/// One bit per element, each element 0 or 1.
using BitString = std::vector<std::uint8_t>;

/// Elementwise XOR. Throws Error(length_mismatch) on unequal sizes.
BitString xor_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Parses hex digits (either case) into bits, most significant bit first.
std::optional<BitString> bits_from_hex(std::string_view hex);

/// Size must be a multiple of 4; emits lowercase digits.
std::string bits_to_hex(std::span<const std::uint8_t> bits);

/// "1010" style, used by tests and log details.
BitString bits_from_string(std::string_view s);
std::string bits_to_string(std::span<const std::uint8_t> bits);

/// FNV-1a over the bit values; stable fingerprint for logs.
std::uint64_t fingerprint(std::span<const std::uint8_t> bits);

/// Packs bits little-endian within 64-bit words (bit i -> word i/64, bit i%64).
std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits);

}  // namespace soqn
