#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "leosim/geometry.hpp"
#include "leosim/orbits.hpp"
#include "leosim/rng.hpp"
#include "leosim/vec3.hpp"

namespace leosim {

struct DiurnalParams {
  double amplitude = 0.0;         // alpha >= 0
  double baseline = 1.0;          // beta > alpha
  double peak_phase_hours = 0.0;  // tau

  void validate() const;
};

/// alpha * sin(2 pi (hour - tau) / 24) + beta
double diurnal_factor(double hour, const DiurnalParams& p);

/// Local solar hour under the given Earth-fixed longitude, in [0, 24).
double local_solar_hour(UtcTime t, double longitude_rad);

/// Regular lat/lon raster of arrival intensity (packets per slot per cell at
/// unit diurnal modulation). Rows run south to north, columns west to east.
class TrafficField {
 public:
  TrafficField(std::size_t n_lat, std::size_t n_lon, std::vector<double> intensity);

  static TrafficField uniform(std::size_t n_lat, std::size_t n_lon, double value);
  /// Text format: "n_lat n_lon lat_min lat_max lon_min lon_max" then n_lat rows
  /// of n_lon values. '#' starts a comment.
  static TrafficField load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TrafficField scaled(double factor) const;

  std::size_t n_lat() const { return n_lat_; }
  std::size_t n_lon() const { return n_lon_; }
  double cell_lat_deg(std::size_t row) const;
  double cell_lon_deg(std::size_t col) const;
  double at(std::size_t row, std::size_t col) const { return intensity_[row * n_lon_ + col]; }
  double& at(std::size_t row, std::size_t col) { return intensity_[row * n_lon_ + col]; }
  std::vector<double> lat_edges() const;
  std::vector<double> lon_edges() const;
  double total() const;

  /// Earth-fixed cell centers on a sphere of the given radius, row-major.
  const std::vector<Vec3>& cell_centers(double earth_radius_km) const;

 private:
  std::size_t n_lat_;
  std::size_t n_lon_;
  std::vector<double> intensity_;
  mutable std::vector<Vec3> centers_;
  mutable double centers_radius_ = -1.0;
};

/// M_tod(hour) * sum of intensity over cells whose centers lie in the
/// footprint. sat_ecef is in the Earth-fixed frame of the grid.
double footprint_rate(const Vec3& sat_ecef, const TrafficField& field, const FootprintParams& fp,
                      double hour, const DiurnalParams& diurnal);

std::int64_t draw_arrivals(double lambda, Rng& rng);

}  // namespace leosim
