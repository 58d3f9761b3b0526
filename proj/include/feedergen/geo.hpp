#pragma once

#include <cmath>
#include <numbers>

#include "feedergen/errors.hpp"

namespace feedergen {

// IUGG mean earth radius, meters.
inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline void validate_geo(const GeoPoint& p, const char* what) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 ||
      p.lat > 90.0 || p.lon < -180.0 || p.lon > 180.0) {
    throw ParseError(std::string(what) + ": coordinates out of range (lat=" +
                     std::to_string(p.lat) + ", lon=" + std::to_string(p.lon) +
                     ")");
  }
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

// Great-circle distance in meters.
inline double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dphi = deg2rad(b.lat - a.lat);
  const double dlam = deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlam / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace feedergen
