#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "soqn/bits.hpp"
#include "soqn/channel.hpp"
#include "soqn/random.hpp"
#include "soqn/types.hpp"

namespace soqn {

enum class Polarization : std::uint8_t { H, V, P, M };
enum class Basis : std::uint8_t { rectilinear, diagonal };

const char* to_string(Polarization p);

Basis basis_of(Polarization p);

enum class PulseKind { strong, single_photon };

struct Pulse {
  PulseKind kind = PulseKind::strong;
  std::optional<Polarization> polarization;
  double intensity = 0.0;
};

enum class AbortReason { none, qber_exceeds_threshold, insufficient_detections, trojan_alarm };

const char* to_string(AbortReason r);

enum class EveMode { none, intercept_resend, trojan_probe };

struct EveConfig {
  EveMode mode = EveMode::none;
  /// Mean photon number injected toward the client; trojan_probe only.
  double probe_intensity = 0.0;
};

/// Post-processing and plug-and-play knobs.
struct QkdConfig {
  double qber_abort = 0.11;
  double sample_fraction = 0.5;
  double f_ec = 1.16;
  std::size_t safety_margin_bits = 100;
  std::size_t min_sift_len = 1000;
  /// Mean photon number of the returned P2 pulse after attenuation.
  double target_mean_photon = 0.5;
  double trojan_tolerance = 0.25;
  double strong_pulse_mean_photons = 1e6;
};

void validate(const QkdConfig& config);

enum class QkdProtocol { bb84, plug_and_play };

const char* to_string(QkdProtocol p);

struct SessionRecord {
  QkdProtocol protocol = QkdProtocol::bb84;
  std::size_t n_pulses = 0;
  std::size_t detections = 0;
  std::size_t sifted_len = 0;
  /// Number of disclosed positions the QBER was estimated from.
  std::size_t qber_sample_size = 0;
  /// Estimated QBER, clamped to [0, 0.5] for reporting.
  double qber = 0.0;
  std::size_t reconciliation_leak_bits = 0;
  /// Sender-side key; empty iff aborted.
  BitString final_key;
  /// Receiver-side key after reconciliation and hashing.
  BitString receiver_final_key;
  bool aborted = false;
  AbortReason abort_reason = AbortReason::none;

  bool operator==(const SessionRecord&) const = default;
};

Polarization prepare(std::uint8_t bit, Basis basis);

/// Matched basis yields the encoded bit; a mismatched basis draws a uniform bit.
std::uint8_t measure(Polarization pol, Basis basis, RandomStream& rng);

/// Eve measures in a uniformly random basis and re-prepares her outcome.
Polarization intercept_resend(Polarization pol, RandomStream& rng);

/// Throws Error(invalid_argument) when expected_intensity <= 0.
bool trojan_monitor(double measured_intensity, double expected_intensity,
                    double tolerance_fraction = 0.25);

struct SiftResult {
  BitString sender;
  BitString receiver;
};

SiftResult sift(std::span<const Basis> sender_bases, std::span<const Basis> receiver_bases,
                std::span<const std::uint8_t> sender_bits,
                std::span<const std::uint8_t> receiver_bits, const std::vector<bool>& detected);

struct QberEstimate {
  double qber = 0.0;
  std::size_t sample_size = 0;
  BitString remaining_sender;
  BitString remaining_receiver;
};

/// Discloses ceil(sample_fraction * len) uniformly chosen positions, reports
/// their mismatch rate and removes them from both keys.
QberEstimate estimate_qber(std::span<const std::uint8_t> sifted_sender,
                           std::span<const std::uint8_t> sifted_receiver,
                           double sample_fraction, RandomStream& rng);

/// Binary entropy in bits; h2(0) = h2(1) = 0.
double binary_entropy(double p);

struct Reconciled {
  BitString corrected;
  std::size_t leak_bits = 0;
};

/// Modeled error correction: the receiver ends up with the sender's key and
/// ceil(f_ec * h2(qber) * len) bits are charged as disclosed.
Reconciled reconcile(std::span<const std::uint8_t> sender_key,
                     std::span<const std::uint8_t> receiver_key, double qber,
                     double f_ec = 1.16);

/// Target length floor(len * (1 - h2(qber))) - leak - margin, or nullopt when
/// that is not positive or qber exceeds the abort threshold.
std::optional<std::size_t> amplified_length(std::size_t len, double qber, std::size_t leak_bits,
                                            std::size_t safety_margin_bits, double qber_abort);

/// Compresses key with a Toeplitz hash drawn from rng. Returns an empty key
/// when amplified_length() declines.
BitString privacy_amplify(std::span<const std::uint8_t> key, double qber, std::size_t leak_bits,
                          RandomStream& rng, const QkdConfig& config = {});

/// Multiplies key by the binary Toeplitz matrix with first-column/row seed
/// `diagonals` (size key.size() + out_len - 1).
BitString toeplitz_hash(std::span<const std::uint8_t> key, std::span<const std::uint8_t> diagonals,
                        std::size_t out_len);

SessionRecord run_bb84_session(const OpticalLink& link, std::size_t n_pulses,
                               const EveConfig& eve, RandomStream& rng,
                               const ChannelParams& channel = {}, const QkdConfig& config = {});

/// Client encodes and returns the attenuated half of the server's strong
/// pulse; the server measures. Only the return leg sees channel loss.
SessionRecord run_plugplay_session(const OpticalLink& server_link, std::size_t n_pulses,
                                   const EveConfig& eve, RandomStream& rng,
                                   const ChannelParams& channel = {},
                                   const QkdConfig& config = {});

}  // namespace soqn
