#include "soqn/qkd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "soqn/error.hpp"

namespace soqn {

const char* to_string(Polarization p) {
  switch (p) {
    case Polarization::H: return "H";
    case Polarization::V: return "V";
    case Polarization::P: return "+";
    case Polarization::M: return "-";
  }
  return "?";
}

const char* to_string(AbortReason r) {
  switch (r) {
    case AbortReason::none: return "none";
    case AbortReason::qber_exceeds_threshold: return "qber_exceeds_threshold";
    case AbortReason::insufficient_detections: return "insufficient_detections";
    case AbortReason::trojan_alarm: return "trojan_alarm";
  }
  return "?";
}

const char* to_string(QkdProtocol p) {
  return p == QkdProtocol::bb84 ? "bb84" : "plug_and_play";
}

Basis basis_of(Polarization p) {
  return (p == Polarization::H || p == Polarization::V) ? Basis::rectilinear : Basis::diagonal;
}

void validate(const QkdConfig& c) {
  if (!(c.qber_abort > 0.0 && c.qber_abort < 0.5)) {
    throw Error(Errc::invalid_argument, "qber_abort must lie in (0, 0.5)");
  }
  if (!(c.sample_fraction > 0.0 && c.sample_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "sample_fraction must lie in (0, 1)");
  }
  if (!(c.f_ec >= 1.0 && std::isfinite(c.f_ec))) {
    throw Error(Errc::invalid_argument, "f_ec must be finite and >= 1");
  }
  if (!(c.target_mean_photon > 0.0 && c.target_mean_photon <= 1.0)) {
    throw Error(Errc::invalid_argument, "target_mean_photon must lie in (0, 1]");
  }
  if (!(c.trojan_tolerance > 0.0 && c.trojan_tolerance < 1.0)) {
    throw Error(Errc::invalid_argument, "trojan_tolerance must lie in (0, 1)");
  }
  if (!(c.strong_pulse_mean_photons > 1.0 && std::isfinite(c.strong_pulse_mean_photons))) {
    throw Error(Errc::invalid_argument, "strong_pulse_mean_photons must exceed 1");
  }
  if (c.min_sift_len < 2) throw Error(Errc::invalid_argument, "min_sift_len must be >= 2");
}

Polarization prepare(std::uint8_t bit, Basis basis) {
  if (basis == Basis::rectilinear) return bit ? Polarization::V : Polarization::H;
  return bit ? Polarization::M : Polarization::P;
}

std::uint8_t measure(Polarization pol, Basis basis, RandomStream& rng) {
  if (basis_of(pol) == basis) {
    return (pol == Polarization::V || pol == Polarization::M) ? 1 : 0;
  }
  return rng.bit();
}

Polarization intercept_resend(Polarization pol, RandomStream& rng) {
  const Basis eve_basis = rng.bit() ? Basis::diagonal : Basis::rectilinear;
  return prepare(measure(pol, eve_basis, rng), eve_basis);
}

bool trojan_monitor(double measured_intensity, double expected_intensity,
                    double tolerance_fraction) {
  if (!(expected_intensity > 0.0)) {
    throw Error(Errc::invalid_argument, "expected intensity must be positive");
  }
  return std::abs(measured_intensity - expected_intensity) / expected_intensity >
         tolerance_fraction;
}

SiftResult sift(std::span<const Basis> sender_bases, std::span<const Basis> receiver_bases,
                std::span<const std::uint8_t> sender_bits,
                std::span<const std::uint8_t> receiver_bits, const std::vector<bool>& detected) {
  const std::size_t n = sender_bases.size();
  if (receiver_bases.size() != n || sender_bits.size() != n || receiver_bits.size() != n ||
      detected.size() != n) {
    throw Error(Errc::length_mismatch, "sift inputs differ in length");
  }
  SiftResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (detected[i] && sender_bases[i] == receiver_bases[i]) {
      out.sender.push_back(sender_bits[i]);
      out.receiver.push_back(receiver_bits[i]);
    }
  }
  return out;
}

QberEstimate estimate_qber(std::span<const std::uint8_t> sifted_sender,
                           std::span<const std::uint8_t> sifted_receiver,
                           double sample_fraction, RandomStream& rng) {
  const std::size_t n = sifted_sender.size();
  if (sifted_receiver.size() != n) {
    throw Error(Errc::length_mismatch, "sifted keys differ in length");
  }
  if (n < 2) throw Error(Errc::invalid_argument, "need at least 2 sifted bits to estimate QBER");
  if (!(sample_fraction > 0.0 && sample_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "sample_fraction must lie in (0, 1)");
  }
  const auto k = static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(n)));

  // Partial Fisher-Yates: the first k entries become a uniform k-subset.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<bool> disclosed(n, false);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < k; ++i) {
    disclosed[idx[i]] = true;
    if (sifted_sender[idx[i]] != sifted_receiver[idx[i]]) ++mismatches;
  }

  QberEstimate out;
  out.sample_size = k;
  out.qber = static_cast<double>(mismatches) / static_cast<double>(k);
  out.remaining_sender.reserve(n - k);
  out.remaining_receiver.reserve(n - k);
  for (std::size_t i = 0; i < n; ++i) {
    if (disclosed[i]) continue;
    out.remaining_sender.push_back(sifted_sender[i]);
    out.remaining_receiver.push_back(sifted_receiver[i]);
  }
  return out;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

Reconciled reconcile(std::span<const std::uint8_t> sender_key,
                     std::span<const std::uint8_t> receiver_key, double qber, double f_ec) {
  if (sender_key.size() != receiver_key.size()) {
    throw Error(Errc::length_mismatch, "reconcile inputs differ in length");
  }
  if (!(qber >= 0.0 && qber < 0.5)) {
    throw Error(Errc::invalid_argument, "reconcile requires qber in [0, 0.5)");
  }
  Reconciled out;
  out.corrected.assign(sender_key.begin(), sender_key.end());
  out.leak_bits = static_cast<std::size_t>(
      std::ceil(f_ec * binary_entropy(qber) * static_cast<double>(sender_key.size())));
  return out;
}

std::optional<std::size_t> amplified_length(std::size_t len, double qber, std::size_t leak_bits,
                                            std::size_t safety_margin_bits, double qber_abort) {
  if (qber > qber_abort) return std::nullopt;
  const double secret = std::floor(static_cast<double>(len) * (1.0 - binary_entropy(qber)));
  const double m = secret - static_cast<double>(leak_bits) - static_cast<double>(safety_margin_bits);
  if (m <= 0.0) return std::nullopt;
  return static_cast<std::size_t>(m);
}

BitString toeplitz_hash(std::span<const std::uint8_t> key, std::span<const std::uint8_t> diagonals,
                        std::size_t out_len) {
  const std::size_t n = key.size();
  if (out_len == 0 || n == 0) return {};
  if (diagonals.size() != n + out_len - 1) {
    throw Error(Errc::length_mismatch, "Toeplitz seed must have n + m - 1 bits");
  }
  // Entry (i, j) is diagonals[i - j + n - 1]. Reversing the key turns each
  // row into a contiguous window of the seed starting at i.
  BitString reversed(key.rbegin(), key.rend());
  const auto kr = pack_bits(reversed);
  auto seed = pack_bits(diagonals);
  seed.push_back(0);
  seed.push_back(0);

  BitString out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < kr.size(); ++w) {
      const std::size_t pos = i + 64 * w;
      const std::size_t word = pos / 64;
      const unsigned shift = pos % 64;
      std::uint64_t window = seed[word] >> shift;
      if (shift != 0) window |= seed[word + 1] << (64 - shift);
      acc ^= window & kr[w];
    }
    out[i] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

BitString privacy_amplify(std::span<const std::uint8_t> key, double qber, std::size_t leak_bits,
                          RandomStream& rng, const QkdConfig& config) {
  if (key.empty()) throw Error(Errc::invalid_argument, "privacy_amplify on empty key");
  const auto m = amplified_length(key.size(), qber, leak_bits, config.safety_margin_bits,
                                  config.qber_abort);
  if (!m) return {};
  BitString diagonals(key.size() + *m - 1);
  for (std::size_t i = 0; i < diagonals.size(); i += 64) {
    std::uint64_t w = rng.next_u64();
    for (std::size_t b = 0; b < 64 && i + b < diagonals.size(); ++b) {
      diagonals[i + b] = static_cast<std::uint8_t>((w >> b) & 1);
    }
  }
  return toeplitz_hash(key, diagonals, *m);
}

namespace {

struct RawTranscript {
  std::vector<Basis> sender_bases;
  std::vector<Basis> receiver_bases;
  BitString sender_bits;
  BitString receiver_bits;
  std::vector<bool> detected_flags;

  explicit RawTranscript(std::size_t n) {
    sender_bases.reserve(n);
    receiver_bases.reserve(n);
    sender_bits.reserve(n);
    receiver_bits.reserve(n);
    detected_flags.reserve(n);
  }
};

Basis random_basis(RandomStream& rng) {
  return rng.bit() ? Basis::diagonal : Basis::rectilinear;
}

SessionRecord abort_with(SessionRecord rec, AbortReason reason) {
  rec.aborted = true;
  rec.abort_reason = reason;
  rec.final_key.clear();
  rec.receiver_final_key.clear();
  return rec;
}

/// Signal leg shared by both protocols: optional intercept-resend, then the
/// receiver's measurement and a gated detection.
void transmit_photon(std::uint8_t bit, Basis sender_basis, double eta, const EveConfig& eve,
                     const ChannelParams& channel, RandomStream& rng, RandomStream& eve_rng,
                     RawTranscript& t) {
  Polarization pol = prepare(bit, sender_basis);
  if (eve.mode == EveMode::intercept_resend) pol = intercept_resend(pol, eve_rng);
  const Basis rx_basis = random_basis(rng);
  const std::uint8_t ideal = measure(pol, rx_basis, rng);
  const DetectionOutcome d = detect(true, ideal, eta, channel, rng);
  t.sender_bases.push_back(sender_basis);
  t.receiver_bases.push_back(rx_basis);
  t.sender_bits.push_back(bit);
  t.receiver_bits.push_back(d.bit);
  t.detected_flags.push_back(d.clicked);
}

SessionRecord post_process(SessionRecord rec, const RawTranscript& t, RandomStream& rng,
                           const QkdConfig& config) {
  rec.detections = static_cast<std::size_t>(
      std::count(t.detected_flags.begin(), t.detected_flags.end(), true));
  SiftResult sifted =
      sift(t.sender_bases, t.receiver_bases, t.sender_bits, t.receiver_bits, t.detected_flags);
  rec.sifted_len = sifted.sender.size();
  if (rec.sifted_len < config.min_sift_len || rec.sifted_len < 2) {
    return abort_with(std::move(rec), AbortReason::insufficient_detections);
  }

  QberEstimate est = estimate_qber(sifted.sender, sifted.receiver, config.sample_fraction, rng);
  rec.qber_sample_size = est.sample_size;
  rec.qber = std::min(est.qber, 0.5);
  if (est.qber > config.qber_abort) {
    return abort_with(std::move(rec), AbortReason::qber_exceeds_threshold);
  }
  if (est.remaining_sender.empty()) {
    return abort_with(std::move(rec), AbortReason::insufficient_detections);
  }

  Reconciled rc = reconcile(est.remaining_sender, est.remaining_receiver, est.qber, config.f_ec);
  rec.reconciliation_leak_bits = rc.leak_bits;

  // Both ends hash with the same public seed; run it twice to check agreement.
  RandomStream pa_sender = rng.fork("pa");
  RandomStream pa_receiver = rng.fork("pa");
  rec.final_key = privacy_amplify(est.remaining_sender, est.qber, rc.leak_bits, pa_sender, config);
  rec.receiver_final_key =
      privacy_amplify(rc.corrected, est.qber, rc.leak_bits, pa_receiver, config);
  if (rec.final_key != rec.receiver_final_key) {
    throw Error(Errc::invariant_violation, "sender and receiver final keys differ");
  }
  if (rec.final_key.empty()) {
    return abort_with(std::move(rec), AbortReason::insufficient_detections);
  }
  return rec;
}

double link_efficiency(const OpticalLink& link, const ChannelParams& channel) {
  return transmittance(link.loss_db) * channel.detector_efficiency;
}

}  // namespace

SessionRecord run_bb84_session(const OpticalLink& link, std::size_t n_pulses,
                               const EveConfig& eve, RandomStream& rng,
                               const ChannelParams& channel, const QkdConfig& config) {
  if (n_pulses == 0) throw Error(Errc::invalid_argument, "n_pulses must be >= 1");
  validate(channel);
  validate(config);
  const double eta = link_efficiency(link, channel);
  RandomStream eve_rng = rng.fork("eve");

  SessionRecord rec;
  rec.protocol = QkdProtocol::bb84;
  rec.n_pulses = n_pulses;
  RawTranscript t(n_pulses);
  for (std::size_t i = 0; i < n_pulses; ++i) {
    const std::uint8_t bit = rng.bit();
    const Basis basis = random_basis(rng);
    transmit_photon(bit, basis, eta, eve, channel, rng, eve_rng, t);
  }
  return post_process(std::move(rec), t, rng, config);
}

SessionRecord run_plugplay_session(const OpticalLink& server_link, std::size_t n_pulses,
                                   const EveConfig& eve, RandomStream& rng,
                                   const ChannelParams& channel, const QkdConfig& config) {
  if (n_pulses == 0) throw Error(Errc::invalid_argument, "n_pulses must be >= 1");
  if (eve.mode == EveMode::trojan_probe && !(eve.probe_intensity > 0.0)) {
    throw Error(Errc::invalid_argument, "trojan probe intensity must be positive");
  }
  validate(channel);
  validate(config);
  const double eta = link_efficiency(server_link, channel);
  RandomStream eve_rng = rng.fork("eve");

  SessionRecord rec;
  rec.protocol = QkdProtocol::plug_and_play;
  rec.n_pulses = n_pulses;
  RawTranscript t(n_pulses);

  // The beam splitter sends half of the arriving light to Dc.
  const double expected_dc = config.strong_pulse_mean_photons / 2.0;
  for (std::size_t i = 0; i < n_pulses; ++i) {
    Pulse forward{PulseKind::strong, std::nullopt, config.strong_pulse_mean_photons};
    if (eve.mode == EveMode::trojan_probe) forward.intensity += eve.probe_intensity;

    const Pulse p1{PulseKind::strong, std::nullopt, forward.intensity / 2.0};
    Pulse p2{PulseKind::strong, std::nullopt, forward.intensity / 2.0};
    if (trojan_monitor(p1.intensity, expected_dc, config.trojan_tolerance)) {
      return abort_with(std::move(rec), AbortReason::trojan_alarm);
    }

    const std::uint8_t bit = rng.bit();
    const Basis basis = random_basis(rng);
    // Attenuation is set from the Dc reading so P2 leaves at the target level.
    const double attenuation = config.target_mean_photon / p1.intensity;
    p2.kind = PulseKind::single_photon;
    p2.polarization = prepare(bit, basis);
    p2.intensity *= attenuation;
    if (p2.intensity > 1.0) {
      throw Error(Errc::invariant_violation, "returned pulse above single-photon level");
    }

    transmit_photon(bit, basis, eta, eve, channel, rng, eve_rng, t);
  }
  return post_process(std::move(rec), t, rng, config);
}

}  // namespace soqn
