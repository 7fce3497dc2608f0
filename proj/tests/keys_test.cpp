#include <gtest/gtest.h>

#include "soqn/error.hpp"
#include "soqn/keys.hpp"
#include "soqn/random.hpp"

namespace soqn {
namespace {

BitString random_bits(RandomStream& rng, std::size_t n) {
  BitString b(n);
  for (auto& x : b) x = rng.bit();
  return b;
}

std::vector<NodeId> chain(std::size_t nodes) {
  std::vector<NodeId> p;
  for (std::size_t i = 0; i < nodes; ++i) p.push_back(NodeId{"n" + std::to_string(i)});
  return p;
}

TEST(Otp, WorkedExample) {
  EXPECT_EQ(otp(bits_from_string("1010"), bits_from_string("0110")), bits_from_string("1100"));
  EXPECT_EQ(otp(bits_from_string("1100"), bits_from_string("0110")), bits_from_string("1010"));
  EXPECT_THROW(otp(BitString{1, 0}, BitString{1}), Error);
}

TEST(Otp, RoundTripProperty) {
  RandomStream rng(1, "otp/prop");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    const BitString m = random_bits(rng, n);
    const BitString k = random_bits(rng, n);
    EXPECT_EQ(otp(otp(m, k), k), m);
  }
}

TEST(KeyBuffer, TakesSequentially) {
  KeyBuffer buf(LinkKey(NodeId{"a"}, NodeId{"b"}));
  buf.append(bits_from_string("10110011"));
  EXPECT_EQ(buf.available(), 8u);
  EXPECT_EQ(buf.take(0, 3), bits_from_string("101"));
  EXPECT_EQ(buf.consumed_offset(), 3u);
  EXPECT_EQ(buf.consume(5), bits_from_string("10011"));
  EXPECT_EQ(buf.available(), 0u);
}

TEST(KeyBuffer, ReuseIsRejected) {
  KeyBuffer buf(LinkKey(NodeId{"a"}, NodeId{"b"}));
  buf.append(BitString(16, 1));
  buf.take(0, 8);
  try {
    buf.take(0, 4);
    FAIL() << "reused key bits";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::key_reuse);
  }
  EXPECT_EQ(buf.consumed_offset(), 8u);
}

TEST(KeyBuffer, StarvationLeavesStateUntouched) {
  KeyBuffer buf(LinkKey(NodeId{"a"}, NodeId{"b"}));
  buf.append(BitString(4, 0));
  try {
    buf.consume(5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::key_starvation);
  }
  EXPECT_EQ(buf.consumed_offset(), 0u);
  EXPECT_EQ(buf.available(), 4u);
}

TEST(KeyBuffer, SkippingAheadIsRejected) {
  KeyBuffer buf(LinkKey(NodeId{"a"}, NodeId{"b"}));
  buf.append(BitString(16, 0));
  EXPECT_THROW(buf.take(4, 2), Error);
}

TEST(KeyBuffer, ZeroLengthMessage) {
  KeyBuffer tx(LinkKey(NodeId{"a"}, NodeId{"b"}));
  KeyBuffer rx(LinkKey(NodeId{"a"}, NodeId{"b"}));
  EXPECT_TRUE(encrypt(BitString{}, tx, 0).empty());
  EXPECT_TRUE(decrypt(BitString{}, rx, 0).empty());
  EXPECT_EQ(tx.consumed_offset(), 0u);
}

TEST(KeyBuffer, EncryptDecryptAcrossMirroredCopies) {
  RandomStream rng(2, "keys/mirror");
  const LinkKey pair(NodeId{"a"}, NodeId{"b"});
  KeyBuffer tx(pair);
  KeyBuffer rx(pair);
  const BitString pool = random_bits(rng, 256);
  tx.append(pool);
  rx.append(pool);
  for (int i = 0; i < 4; ++i) {
    const BitString m = random_bits(rng, 64);
    const std::size_t off = tx.consumed_offset();
    EXPECT_EQ(decrypt(encrypt(m, tx, off), rx, off), m);
  }
  EXPECT_EQ(tx.available(), 0u);
  EXPECT_EQ(rx.available(), 0u);
}

TEST(RelayTicket, SingleRelayIdentity) {
  // M xor K1, then K1 xor K2 published: C xor K2 xor (K1 xor K2) = M.
  const BitString m = bits_from_string("1010");
  const BitString k1 = bits_from_string("0110");
  const BitString k2 = bits_from_string("1111");
  const auto t = make_relay_ticket(chain(3), {k1, k2});
  ASSERT_EQ(t.broadcasts.size(), 1u);
  EXPECT_EQ(t.broadcasts[0].relay, NodeId{"n1"});
  EXPECT_EQ(t.broadcasts[0].xor_block, bits_from_string("1001"));
  EXPECT_EQ(decrypt_relay(otp(m, k1), k2, t), m);
}

TEST(RelayTicket, ChainOracle) {
  RandomStream rng(3, "keys/chain");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t hops = 2 + rng.below(5);
    const std::size_t len = 1 + rng.below(128);
    std::vector<BitString> keys;
    for (std::size_t h = 0; h < hops; ++h) keys.push_back(random_bits(rng, len));
    const BitString m = random_bits(rng, len);
    // Hop-by-hop reference: each relay decrypts with the inbound key and
    // re-encrypts with the outbound key.
    BitString c = otp(m, keys[0]);
    for (std::size_t h = 1; h < hops; ++h) c = otp(otp(c, keys[h - 1]), keys[h]);
    EXPECT_EQ(otp(c, keys.back()), m);

    const auto t = make_relay_ticket(chain(hops + 1), keys);
    ASSERT_EQ(t.broadcasts.size(), hops - 1);
    EXPECT_EQ(decrypt_relay(otp(m, keys[0]), keys.back(), t), m);
  }
}

TEST(RelayTicket, PublicTranscriptAloneDoesNotRevealMessage) {
  RandomStream rng(4, "keys/eve");
  int recovered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 64;
    const std::vector<BitString> keys = {random_bits(rng, len), random_bits(rng, len),
                                         random_bits(rng, len)};
    const BitString m = random_bits(rng, len);
    const BitString c = otp(m, keys[0]);
    const auto t = make_relay_ticket(chain(4), keys);
    BitString guess = c;
    for (const auto& b : t.broadcasts) guess = otp(guess, b.xor_block);
    if (guess == m) ++recovered;
    EXPECT_EQ(guess, otp(m, keys.back()));
  }
  EXPECT_EQ(recovered, 0);
}

TEST(RelayTicket, MissingBroadcast) {
  RandomStream rng(5, "keys/missing");
  const std::vector<BitString> keys = {random_bits(rng, 8), random_bits(rng, 8),
                                       random_bits(rng, 8)};
  auto t = make_relay_ticket(chain(4), keys);
  t.broadcasts.pop_back();
  try {
    decrypt_relay(otp(BitString(8, 1), keys[0]), keys.back(), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_broadcast);
  }
}

TEST(RelayTicket, LengthAndShapeErrors) {
  const BitString k(8, 0);
  EXPECT_THROW(make_relay_ticket(chain(2), {k}), Error);
  EXPECT_THROW(make_relay_ticket(chain(3), {k}), Error);
  const auto t = make_relay_ticket(chain(3), {k, k});
  EXPECT_THROW(decrypt_relay(BitString(7, 0), BitString(7, 0), t), Error);
}

}  // namespace
}  // namespace soqn
