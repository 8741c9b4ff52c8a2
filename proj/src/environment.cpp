#include "leosim/environment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace leosim {

namespace {

std::string trim_copy(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

std::vector<Gateway> load_gateways(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gateway file " + path.string());
  std::vector<Gateway> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_copy(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(trim_copy(col));
    if (cols.size() < 4 || cols.size() > 5)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected id,name,lat,lon[,region]");
    Gateway g;
    try {
      g.id = std::stoi(cols[0]);
      g.latitude_deg = std::stod(cols[2]);
      g.longitude_deg = std::stod(cols[3]);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    g.name = cols[1];
    if (cols.size() == 5) g.region = cols[4];
    GroundSite::from_degrees(g.latitude_deg, g.longitude_deg);
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const Gateway& a, const Gateway& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].id == out[i - 1].id)
      throw std::runtime_error(path.string() + ": duplicate gateway id " + std::to_string(out[i].id));
  return out;
}

std::vector<Gateway> gateway_preset(const std::vector<Gateway>& all, const std::string& preset) {
  if (preset == "hybrid" || preset == "global") return all;
  std::vector<Gateway> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out),
               [&](const Gateway& g) { return g.region == preset; });
  if (out.empty() && !all.empty()) throw ConfigError("gateway preset '" + preset + "' selects no gateways");
  return out;
}

Scenario::Scenario(const RunConfig& cfg) : cfg_(cfg), shadowing_(cfg.shadowing) {
  cfg_.validate();
  auto all = load_tle_file(cfg_.tle_file);
  if (all.size() < cfg_.num_satellites)
    throw ConfigError("constellation file " + cfg_.tle_file.string() + " has " +
                      std::to_string(all.size()) + " satellites, " +
                      std::to_string(cfg_.num_satellites) + " requested");
  tles_.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg_.num_satellites));
  num_sats_ = tles_.size();
  if (!cfg_.gateway_file.empty())
    gateways_ = gateway_preset(load_gateways(cfg_.gateway_file), cfg_.gateway_preset);

  const TrafficField field = TrafficField::load(cfg_.traffic_grid).scaled(cfg_.traffic_calibration);
  const KeplerPropagator propagator(cfg_.j2_secular);
  std::vector<std::vector<OrbitState>> tracks;
  tracks.reserve(num_sats_);
  for (const auto& rec : tles_) tracks.push_back(propagate(rec, cfg_.grid, propagator));

  std::vector<GroundSite> sites;
  for (const auto& g : gateways_) sites.push_back(GroundSite::from_degrees(g.latitude_deg, g.longitude_deg));
  const double R = cfg_.footprint.earth_radius_km;

  slots_.resize(cfg_.grid.num_slots);
  for (std::size_t t = 0; t < slots_.size(); ++t) {
    Slot& s = slots_[t];
    const UtcTime when = cfg_.grid.time_at(t);
    for (std::size_t k = 0; k < num_sats_; ++k) {
      s.positions.push_back(tracks[k][t].position);
      s.velocities.push_back(tracks[k][t].velocity);
    }
    std::vector<Vec3> gw_eci;
    for (const auto& site : sites) gw_eci.push_back(ground_site_eci(site, cfg_.grid, t, R));
    s.snapshot = build_snapshot(t, s.positions, s.velocities, gw_eci, cfg_.neighbors, cfg_.footprint);
    s.links = s.snapshot.links();
    for (const auto& l : s.links) {
      const double snr = isl_snr(s.positions[l.from], s.positions[l.to], cfg_.isl);
      s.isl_caps.push_back(isl_capacity_packets(snr, cfg_.isl, cfg_.lg.packet_bits, cfg_.grid.slot_seconds));
    }
    s.lg_mean_snr.assign(num_sats_, 0.0);
    s.elevation.assign(num_sats_, 0.0);
    s.arrival_rate.assign(num_sats_, 0.0);
    for (std::size_t k = 0; k < num_sats_; ++k) {
      if (const auto g = s.snapshot.gateway_of[k]) {
        s.lg_mean_snr[k] = leosim::lg_mean_snr(s.positions[k], gw_eci[*g], cfg_.lg);
        s.elevation[k] = elevation_angle(s.positions[k], gw_eci[*g]);
      }
      const Vec3 ecef = eci_to_ecef(s.positions[k], when);
      const double hour = local_solar_hour(when, std::atan2(ecef.y, ecef.x));
      s.arrival_rate[k] = footprint_rate(ecef, field, cfg_.footprint, hour, cfg_.diurnal);
    }
  }
}

const ShadowedRicianParams& Scenario::shadowing(std::size_t t, std::size_t k) const {
  return shadowing_.lookup(slots_[t].elevation[k]);
}

double Scenario::isl_packet_scale() const {
  return cfg_.isl.bandwidth_hz * cfg_.grid.slot_seconds / cfg_.lg.packet_bits;
}

double Scenario::lg_packet_scale() const { return cfg_.lg.packets_per_bit_per_hz(cfg_.grid.slot_seconds); }

SlotDraws draw_slot(const Scenario& sc, std::size_t t, Rng& env_rng) {
  const std::size_t n = sc.num_satellites();
  SlotDraws d;
  d.fading.resize(n);
  d.arrivals.resize(n);
  d.lg_caps.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) d.fading[k] = sample_fading(sc.shadowing(t, k), env_rng);
  for (std::size_t k = 0; k < n; ++k) d.arrivals[k] = draw_arrivals(sc.arrival_rate(t, k), env_rng);
  const auto& snap = sc.snapshot(t);
  for (std::size_t k = 0; k < n; ++k)
    if (snap.visible[k])
      d.lg_caps[k] = lg_capacity_packets(sc.lg_mean_snr(t, k), d.fading[k], sc.config().lg, sc.slot_seconds());
  return d;
}

}  // namespace leosim
