#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "leosim/vec3.hpp"

namespace leosim {

/// UTC instant as seconds since J2000 (2000-01-01T12:00:00). UTC is treated
/// as a uniform time scale; leap seconds are ignored.
struct UtcTime {
  double seconds_since_j2000 = 0.0;

  constexpr UtcTime plus_seconds(double s) const { return {seconds_since_j2000 + s}; }
  constexpr double seconds_until(UtcTime later) const {
    return later.seconds_since_j2000 - seconds_since_j2000;
  }
  constexpr auto operator<=>(const UtcTime&) const = default;
};

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff][Z]" (a space may replace the T).
UtcTime parse_iso8601(std::string_view text);
std::string format_iso8601(UtcTime t);
UtcTime utc_from_calendar(int year, int month, int day, int hour, int minute, double second);
double julian_date(UtcTime t);
/// Hour of day in [0, 24) on the UTC clock.
double utc_hour_of_day(UtcTime t);

/// Greenwich mean sidereal time (IAU 1982 expression), radians in [0, 2*pi).
double gmst(UtcTime t);

struct TimeGrid {
  UtcTime t0;
  double slot_seconds = 60.0;
  std::size_t num_slots = 1;

  UtcTime time_at(std::size_t slot) const {
    return t0.plus_seconds(slot_seconds * static_cast<double>(slot));
  }
  void validate() const;
};

struct TleRecord {
  int satellite_id = 0;
  std::string name;
  UtcTime epoch;
  double inclination = 0.0;   // rad
  double raan = 0.0;          // rad
  double eccentricity = 0.0;
  double arg_perigee = 0.0;   // rad
  double mean_anomaly = 0.0;  // rad
  double mean_motion = 0.0;   // rev/day

  double semi_major_axis_km() const;
  double period_seconds() const { return 86400.0 / mean_motion; }
};

class TleParseError : public std::runtime_error {
 public:
  TleParseError(std::size_t line, const std::string& what)
      : std::runtime_error("TLE line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Modulo-10 checksum over the first 68 columns: digits count their value,
/// '-' counts 1, everything else 0.
int tle_checksum(std::string_view line);

/// Parses 2-line or 3-line (named) element sets in file order.
std::vector<TleRecord> parse_tle(std::string_view text);
std::vector<TleRecord> load_tle_file(const std::filesystem::path& path);

/// Formats a record back to a checksummed 2-line element set (no name line).
std::pair<std::string, std::string> format_tle(const TleRecord& rec);

struct OrbitState {
  Vec3 position;  // km, ECI
  Vec3 velocity;  // km/s, ECI
  std::size_t slot = 0;
};

class KeplerError : public std::runtime_error {
 public:
  KeplerError(int satellite_id, std::size_t slot)
      : std::runtime_error("Kepler solver did not converge for satellite " +
                           std::to_string(satellite_id) + " at slot " + std::to_string(slot)),
        satellite_id_(satellite_id),
        slot_(slot) {}
  int satellite_id() const { return satellite_id_; }
  std::size_t slot() const { return slot_; }

 private:
  int satellite_id_;
  std::size_t slot_;
};

/// Solves E - e sin E = M. Newton first; falls back to bisection on
/// [M - e, M + e] if Newton stalls. Empty if neither meets tol within max_iter,
/// or when e lies outside [0, 1).
std::optional<double> solve_kepler(double mean_anomaly, double eccentricity, int max_iter = 50,
                                   double tol = 1e-12);

/// Position/velocity source for a TLE. A full SGP4 can be slotted in here.
class Propagator {
 public:
  virtual ~Propagator() = default;
  /// Throws KeplerError (slot is reported by the caller's context).
  virtual OrbitState state_at(const TleRecord& rec, UtcTime t, std::size_t slot) const = 0;
};

/// Two-body propagation of TLE mean elements, optionally with J2 secular drift
/// of RAAN and argument of perigee.
class KeplerPropagator final : public Propagator {
 public:
  explicit KeplerPropagator(bool j2_secular = false) : j2_(j2_secular) {}
  OrbitState state_at(const TleRecord& rec, UtcTime t, std::size_t slot) const override;

 private:
  bool j2_;
};

/// One state per slot of the grid. Warns on stderr when the grid start is more
/// than 30 days from the element epoch.
std::vector<OrbitState> propagate(const TleRecord& rec, const TimeGrid& grid,
                                  const Propagator& propagator);
std::vector<OrbitState> propagate(const TleRecord& rec, const TimeGrid& grid);

struct GroundSite {
  double latitude = 0.0;   // rad, |lat| <= pi/2
  double longitude = 0.0;  // rad, [-pi, pi)
  double altitude_km = 0.0;

  /// Validates latitude and wraps longitude into [-pi, pi).
  static GroundSite from_degrees(double lat_deg, double lon_deg, double altitude_km = 0.0);
};

/// Earth-fixed position on a spherical Earth of radius earth_radius_km + altitude.
Vec3 ground_site_ecef(const GroundSite& site, double earth_radius_km);
Vec3 ground_site_eci(const GroundSite& site, const TimeGrid& grid, std::size_t slot,
                     double earth_radius_km);

Vec3 ecef_to_eci(const Vec3& ecef, UtcTime t);
Vec3 eci_to_ecef(const Vec3& eci, UtcTime t);

}  // namespace leosim
