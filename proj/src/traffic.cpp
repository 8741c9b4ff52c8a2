#include "leosim/traffic.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "leosim/constants.hpp"

namespace leosim {

void DiurnalParams::validate() const {
  if (!(amplitude >= 0.0) || !(baseline > amplitude))
    throw std::invalid_argument("diurnal: need baseline > amplitude >= 0");
}

double diurnal_factor(double hour, const DiurnalParams& p) {
  return p.amplitude * std::sin(kTwoPi * (hour - p.peak_phase_hours) / 24.0) + p.baseline;
}

double local_solar_hour(UtcTime t, double longitude_rad) {
  double h = std::fmod(utc_hour_of_day(t) + longitude_rad * kRadToDeg / 15.0, 24.0);
  if (h < 0.0) h += 24.0;
  return h;
}

TrafficField::TrafficField(std::size_t n_lat, std::size_t n_lon, std::vector<double> intensity)
    : n_lat_(n_lat), n_lon_(n_lon), intensity_(std::move(intensity)) {
  if (n_lat_ == 0 || n_lon_ == 0) throw std::invalid_argument("traffic field: empty grid");
  if (intensity_.size() != n_lat_ * n_lon_)
    throw std::invalid_argument("traffic field: expected " + std::to_string(n_lat_ * n_lon_) +
                                " values, got " + std::to_string(intensity_.size()));
  for (double v : intensity_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("traffic field: intensity must be finite and non-negative");
}

TrafficField TrafficField::uniform(std::size_t n_lat, std::size_t n_lon, double value) {
  return TrafficField(n_lat, n_lon, std::vector<double>(n_lat * n_lon, value));
}

TrafficField TrafficField::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open traffic grid " + path.string());
  std::stringstream clean;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    clean << line << '\n';
  }
  std::size_t n_lat = 0, n_lon = 0;
  double lat0, lat1, lon0, lon1;
  if (!(clean >> n_lat >> n_lon >> lat0 >> lat1 >> lon0 >> lon1))
    throw std::runtime_error("traffic grid " + path.string() + ": bad header");
  if (lat0 != -90.0 || lat1 != 90.0 || lon0 != -180.0 || lon1 != 180.0)
    throw std::runtime_error("traffic grid " + path.string() + ": must cover [-90,90]x[-180,180]");
  std::vector<double> values;
  values.reserve(n_lat * n_lon);
  double v;
  while (clean >> v) values.push_back(v);
  if (!clean.eof()) throw std::runtime_error("traffic grid " + path.string() + ": unparsable value");
  return TrafficField(n_lat, n_lon, std::move(values));
}

void TrafficField::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write traffic grid " + path.string());
  out << n_lat_ << ' ' << n_lon_ << " -90 90 -180 180\n" << std::setprecision(9);
  for (std::size_t r = 0; r < n_lat_; ++r) {
    for (std::size_t c = 0; c < n_lon_; ++c) out << (c ? " " : "") << at(r, c);
    out << '\n';
  }
}

TrafficField TrafficField::scaled(double factor) const {
  if (!(factor >= 0.0)) throw std::invalid_argument("traffic calibration must be >= 0");
  std::vector<double> v = intensity_;
  for (double& x : v) x *= factor;
  return TrafficField(n_lat_, n_lon_, std::move(v));
}

double TrafficField::cell_lat_deg(std::size_t row) const {
  return -90.0 + (static_cast<double>(row) + 0.5) * 180.0 / static_cast<double>(n_lat_);
}

double TrafficField::cell_lon_deg(std::size_t col) const {
  return -180.0 + (static_cast<double>(col) + 0.5) * 360.0 / static_cast<double>(n_lon_);
}

std::vector<double> TrafficField::lat_edges() const {
  std::vector<double> e(n_lat_ + 1);
  for (std::size_t i = 0; i <= n_lat_; ++i) e[i] = -90.0 + 180.0 * static_cast<double>(i) / n_lat_;
  return e;
}

std::vector<double> TrafficField::lon_edges() const {
  std::vector<double> e(n_lon_ + 1);
  for (std::size_t i = 0; i <= n_lon_; ++i) e[i] = -180.0 + 360.0 * static_cast<double>(i) / n_lon_;
  return e;
}

double TrafficField::total() const {
  double s = 0.0;
  for (double v : intensity_) s += v;
  return s;
}

const std::vector<Vec3>& TrafficField::cell_centers(double earth_radius_km) const {
  if (centers_radius_ != earth_radius_km) {
    centers_.clear();
    centers_.reserve(intensity_.size());
    for (std::size_t r = 0; r < n_lat_; ++r)
      for (std::size_t c = 0; c < n_lon_; ++c)
        centers_.push_back(ground_site_ecef(
            GroundSite{cell_lat_deg(r) * kDegToRad, cell_lon_deg(c) * kDegToRad, 0.0}, earth_radius_km));
    centers_radius_ = earth_radius_km;
  }
  return centers_;
}

double footprint_rate(const Vec3& sat_ecef, const TrafficField& field, const FootprintParams& fp,
                      double hour, const DiurnalParams& diurnal) {
  const auto& centers = field.cell_centers(fp.earth_radius_km);
  double sum = 0.0;
  for (std::size_t r = 0; r < field.n_lat(); ++r) {
    for (std::size_t c = 0; c < field.n_lon(); ++c) {
      const double rho = field.at(r, c);
      if (rho > 0.0 && in_footprint(sat_ecef, centers[r * field.n_lon() + c], fp)) sum += rho;
    }
  }
  return diurnal_factor(hour, diurnal) * sum;
}

std::int64_t draw_arrivals(double lambda, Rng& rng) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("draw_arrivals: negative rate");
  return rng.poisson(lambda);
}

}  // namespace leosim
