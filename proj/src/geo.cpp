#include "soqn/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "soqn/error.hpp"

namespace soqn {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

GeoPosition GeoPosition::make(double latitude_deg, double longitude_deg, double altitude_m) {
  if (!std::isfinite(latitude_deg) || latitude_deg < -90.0 || latitude_deg > 90.0) {
    throw Error(Errc::invalid_argument, "latitude out of [-90, 90]: " + std::to_string(latitude_deg));
  }
  if (!std::isfinite(longitude_deg)) {
    throw Error(Errc::invalid_argument, "longitude not finite");
  }
  if (!std::isfinite(altitude_m) || altitude_m < -500.0) {
    throw Error(Errc::invalid_argument, "altitude below -500 m or not finite");
  }
  double lon = std::fmod(longitude_deg + 180.0, 360.0);
  if (lon < 0.0) lon += 360.0;
  lon -= 180.0;
  if (lon >= 180.0) lon -= 360.0;
  return GeoPosition{latitude_deg, lon, altitude_m};
}

bool is_valid(const GeoPosition& p) {
  return std::isfinite(p.latitude_deg) && p.latitude_deg >= -90.0 && p.latitude_deg <= 90.0 &&
         std::isfinite(p.longitude_deg) && p.longitude_deg >= -180.0 && p.longitude_deg < 180.0 &&
         std::isfinite(p.altitude_m) && p.altitude_m >= -500.0;
}

double central_angle(const GeoPosition& a, const GeoPosition& b) {
  const double phi1 = a.latitude_deg * kDegToRad;
  const double phi2 = b.latitude_deg * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.longitude_deg - a.longitude_deg) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * std::asin(std::sqrt(h));
}

double geodesic_distance(const GeoPosition& a, const GeoPosition& b, double earth_radius_km) {
  if (a == b) return 0.0;
  const double mean_alt_km = (a.altitude_m + b.altitude_m) / 2000.0;
  const double surface = central_angle(a, b) * (earth_radius_km + mean_alt_km);
  const double dalt = (a.altitude_m - b.altitude_m) / 1000.0;
  return std::sqrt(surface * surface + dalt * dalt);
}

bool line_of_sight(const GeoPosition& a, const GeoPosition& b,
                   const LinkFeasibilityParams& params) {
  const double r = params.earth_radius_km;
  const double ha = std::max(a.altitude_m, kMinEyeHeightM) / 1000.0;
  const double hb = std::max(b.altitude_m, kMinEyeHeightM) / 1000.0;
  // Each endpoint sees the surface up to the angle of its tangent point; the
  // chord clears the sphere iff the separation fits within both horizons.
  const double horizon_a = std::acos(r / (r + ha));
  const double horizon_b = std::acos(r / (r + hb));
  return central_angle(a, b) <= horizon_a + horizon_b;
}

bool link_feasible(const GeoPosition& a, const GeoPosition& b,
                   const LinkFeasibilityParams& params) {
  if (geodesic_distance(a, b, params.earth_radius_km) > params.max_range_km) return false;
  return !params.require_los || line_of_sight(a, b, params);
}

}  // namespace soqn
