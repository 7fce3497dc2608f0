#pragma once

namespace soqn {

/// Broadcast location of a node. Construct through make() to get validation
/// and longitude normalization into [-180, 180).
struct GeoPosition {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_m = 0.0;

  static GeoPosition make(double latitude_deg, double longitude_deg, double altitude_m);

  bool operator==(const GeoPosition&) const = default;
};

bool is_valid(const GeoPosition& p);

struct LinkFeasibilityParams {
  double max_range_km = 144.0;
  double earth_radius_km = 6371.0;
  bool require_los = true;
};

/// Ground elevation assumed for nodes at or below sea level when testing
/// line of sight.
inline constexpr double kMinEyeHeightM = 2.0;

/// Haversine surface distance on a sphere of radius R + mean altitude,
/// composed with the altitude difference: sqrt(surface^2 + dalt^2).
double geodesic_distance(const GeoPosition& a, const GeoPosition& b,
                         double earth_radius_km = 6371.0);

/// Central angle between the two positions, radians.
double central_angle(const GeoPosition& a, const GeoPosition& b);

/// True iff the chord between the two elevated points clears the sphere.
bool line_of_sight(const GeoPosition& a, const GeoPosition& b,
                   const LinkFeasibilityParams& params = {});

bool link_feasible(const GeoPosition& a, const GeoPosition& b,
                   const LinkFeasibilityParams& params = {});

}  // namespace soqn
