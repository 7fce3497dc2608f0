#include "soqn/keys.hpp"

#include <fmt/format.h>

#include "soqn/error.hpp"

namespace soqn {

void KeyBuffer::append(std::span<const std::uint8_t> bits) {
  bits_.insert(bits_.end(), bits.begin(), bits.end());
}

BitString KeyBuffer::take(std::size_t offset, std::size_t n) {
  if (offset < consumed_) {
    throw Error(Errc::key_reuse, fmt::format("key bits at offset {} of {}-{} already consumed",
                                             offset, pair_.first().value, pair_.second().value));
  }
  if (offset != consumed_) {
    throw Error(Errc::invalid_argument, "key blocks must be taken in order");
  }
  if (n > available()) {
    throw Error(Errc::key_starvation,
                fmt::format("need {} key bits on {}-{}, have {}", n, pair_.first().value,
                            pair_.second().value, available()));
  }
  BitString out(bits_.begin() + static_cast<std::ptrdiff_t>(offset),
                bits_.begin() + static_cast<std::ptrdiff_t>(offset + n));
  consumed_ = offset + n;
  return out;
}

BitString encrypt(std::span<const std::uint8_t> plaintext, KeyBuffer& key, std::size_t offset) {
  BitString k = key.take(offset, plaintext.size());
  return otp(plaintext, k);
}

BitString decrypt(std::span<const std::uint8_t> ciphertext, KeyBuffer& key, std::size_t offset) {
  BitString k = key.take(offset, ciphertext.size());
  return otp(ciphertext, k);
}

RelayTicket make_relay_ticket(const std::vector<NodeId>& path,
                              const std::vector<BitString>& hop_keys) {
  if (path.size() < 3) throw Error(Errc::invalid_argument, "relay path needs at least 3 nodes");
  if (hop_keys.size() != path.size() - 1) {
    throw Error(Errc::length_mismatch, "need one key per hop");
  }
  RelayTicket t;
  t.path = path;
  t.block_len = hop_keys.front().size();
  for (std::size_t j = 1; j + 1 < path.size(); ++j) {
    t.broadcasts.push_back(RelayBroadcast{path[j], xor_bits(hop_keys[j - 1], hop_keys[j])});
  }
  return t;
}

BitString decrypt_relay(std::span<const std::uint8_t> ciphertext,
                        std::span<const std::uint8_t> receiver_key, const RelayTicket& ticket) {
  if (ciphertext.size() != receiver_key.size() || ciphertext.size() != ticket.block_len) {
    throw Error(Errc::length_mismatch, "ciphertext, key and ticket block lengths differ");
  }
  const std::size_t interior = ticket.path.size() >= 2 ? ticket.path.size() - 2 : 0;
  if (ticket.broadcasts.size() != interior) {
    throw Error(Errc::missing_broadcast,
                fmt::format("ticket has {} of {} relay broadcasts", ticket.broadcasts.size(),
                            interior));
  }
  BitString m = xor_bits(ciphertext, receiver_key);
  for (const auto& b : ticket.broadcasts) m = xor_bits(m, b.xor_block);
  return m;
}

}  // namespace soqn
