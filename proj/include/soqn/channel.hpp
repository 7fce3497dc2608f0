#pragma once

#include <cstdint>

#include "soqn/random.hpp"

namespace soqn {

struct ChannelParams {
  double atm_loss_db_per_km = 0.2;
  double fixed_system_loss_db = 5.0;
  double dark_count_prob = 1e-6;
  /// 0 for night operation; around 1e-4 in daylight.
  double background_prob = 0.0;
  double detector_efficiency = 0.5;
  double intrinsic_error_prob = 0.01;
};

/// Throws Error(invalid_argument) when any field is out of range.
void validate(const ChannelParams& params);

struct DetectionOutcome {
  bool clicked = false;
  std::uint8_t bit = 0;
  bool noise_click = false;

  bool operator==(const DetectionOutcome&) const = default;
};

double path_loss_db(double distance_km, const ChannelParams& params);

/// 10^(-loss_db/10).
double transmittance(double loss_db);

/// Overall detection probability of a signal photon over the given distance.
double total_efficiency(double distance_km, const ChannelParams& params);

/// One gated detection opportunity. Consumes exactly four draws from rng
/// regardless of outcome, so the stream position depends only on the number
/// of gates.
DetectionOutcome detect(bool signal_present, std::uint8_t signal_correct_bit, double eta_total,
                        const ChannelParams& params, RandomStream& rng);

}  // namespace soqn
