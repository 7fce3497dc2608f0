#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "soqn/bits.hpp"
#include "soqn/types.hpp"

namespace soqn {

/// One endpoint's copy of the key pool shared over a link. Bits before
/// consumed_offset() have been used and are never handed out again.
class KeyBuffer {
 public:
  explicit KeyBuffer(LinkKey pair) : pair_(std::move(pair)) {}

  const LinkKey& pair() const noexcept { return pair_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t consumed_offset() const noexcept { return consumed_; }
  std::size_t available() const noexcept { return bits_.size() - consumed_; }

  void append(std::span<const std::uint8_t> bits);

  /// Hands out [offset, offset + n) and marks it consumed. Throws
  /// Error(key_reuse) when offset is below consumed_offset() and
  /// Error(key_starvation) when the pool is too short.
  BitString take(std::size_t offset, std::size_t n);
  BitString consume(std::size_t n) { return take(consumed_, n); }

 private:
  LinkKey pair_;
  BitString bits_;
  std::size_t consumed_ = 0;
};

/// C = M xor K. Pure; the OTP discipline lives in the KeyBuffer overloads.
inline BitString otp(std::span<const std::uint8_t> message, std::span<const std::uint8_t> key) {
  return xor_bits(message, key);
}

BitString encrypt(std::span<const std::uint8_t> plaintext, KeyBuffer& key, std::size_t offset);
BitString decrypt(std::span<const std::uint8_t> ciphertext, KeyBuffer& key, std::size_t offset);

struct RelayBroadcast {
  NodeId relay;
  BitString xor_block;

  bool operator==(const RelayBroadcast&) const = default;
};

/// Public part of a trusted-relay exchange along path [src, r1..rk, dst].
struct RelayTicket {
  std::vector<NodeId> path;
  std::vector<RelayBroadcast> broadcasts;
  std::size_t block_len = 0;
};

/// Relay j (path index j) publishes hop_keys[j-1] xor hop_keys[j], where
/// hop_keys[i] is the key shared over (path[i], path[i+1]).
RelayTicket make_relay_ticket(const std::vector<NodeId>& path,
                              const std::vector<BitString>& hop_keys);

/// M = C xor K_receiver xor (xor of all broadcasts). With one relay this is
/// C xor K2 xor K3.
BitString decrypt_relay(std::span<const std::uint8_t> ciphertext,
                        std::span<const std::uint8_t> receiver_key, const RelayTicket& ticket);

}  // namespace soqn
