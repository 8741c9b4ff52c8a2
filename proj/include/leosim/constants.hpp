#pragma once

namespace leosim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

// Spherical Earth used for all geometry.
inline constexpr double kEarthRadiusKm = 6371.0;
// WGS-84 gravitational parameter and the reference radius paired with J2.
inline constexpr double kMuEarth = 398600.4418;  // km^3/s^2
inline constexpr double kJ2 = 1.08262668e-3;
inline constexpr double kJ2RadiusKm = 6378.137;

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

}  // namespace leosim
