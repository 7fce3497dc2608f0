#include "soqn/channel.hpp"

#include <cmath>

#include "soqn/error.hpp"

namespace soqn {
namespace {

bool is_prob(double p) { return std::isfinite(p) && p >= 0.0 && p < 1.0; }

}  // namespace

void validate(const ChannelParams& p) {
  if (!std::isfinite(p.atm_loss_db_per_km) || p.atm_loss_db_per_km < 0.0 ||
      !std::isfinite(p.fixed_system_loss_db) || p.fixed_system_loss_db < 0.0) {
    throw Error(Errc::invalid_argument, "channel losses must be finite and non-negative");
  }
  if (!is_prob(p.dark_count_prob) || !is_prob(p.background_prob)) {
    throw Error(Errc::invalid_argument, "noise probabilities must lie in [0, 1)");
  }
  if (!(p.detector_efficiency > 0.0 && p.detector_efficiency <= 1.0)) {
    throw Error(Errc::invalid_argument, "detector_efficiency must lie in (0, 1]");
  }
  if (!(p.intrinsic_error_prob >= 0.0 && p.intrinsic_error_prob < 0.5)) {
    throw Error(Errc::invalid_argument, "intrinsic_error_prob must lie in [0, 0.5)");
  }
}

double path_loss_db(double distance_km, const ChannelParams& params) {
  if (!(distance_km >= 0.0)) throw Error(Errc::invalid_argument, "negative distance");
  return params.fixed_system_loss_db + params.atm_loss_db_per_km * distance_km;
}

double transmittance(double loss_db) {
  if (!(loss_db >= 0.0)) throw Error(Errc::invalid_argument, "negative loss");
  return std::pow(10.0, -loss_db / 10.0);
}

double total_efficiency(double distance_km, const ChannelParams& params) {
  return transmittance(path_loss_db(distance_km, params)) * params.detector_efficiency;
}

DetectionOutcome detect(bool signal_present, std::uint8_t signal_correct_bit, double eta_total,
                        const ChannelParams& params, RandomStream& rng) {
  if (!(eta_total > 0.0 && eta_total <= 1.0)) {
    throw Error(Errc::invalid_argument, "eta_total must lie in (0, 1]");
  }
  const double u_signal = rng.uniform();
  const double u_noise = rng.uniform();
  const double u_flip = rng.uniform();
  const std::uint8_t noise_bit = rng.bit();

  const bool signal_click = signal_present && u_signal < eta_total;
  const bool noise = u_noise < params.dark_count_prob + params.background_prob;

  DetectionOutcome out;
  if (signal_click) {
    out.clicked = true;
    out.bit = signal_correct_bit ^ static_cast<std::uint8_t>(u_flip < params.intrinsic_error_prob);
  } else if (noise) {
    out.clicked = true;
    out.noise_click = true;
    out.bit = noise_bit;
  }
  return out;
}

}  // namespace soqn
