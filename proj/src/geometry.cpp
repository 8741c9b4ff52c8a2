#include "leosim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace leosim {

void NeighborParams::validate() const {
  if (!(max_range_km > 0.0)) throw std::invalid_argument("neighbors: max_range_km must be > 0");
  if (!(max_plane_angle > 0.0 && max_plane_angle <= kPi))
    throw std::invalid_argument("neighbors: max_plane_angle must lie in (0, pi]");
}

void FootprintParams::validate() const {
  if (!(min_elevation >= 0.0 && min_elevation < kPi / 2))
    throw std::invalid_argument("footprint: min_elevation must lie in [0, pi/2)");
  if (!(earth_radius_km > 0.0)) throw std::invalid_argument("footprint: earth_radius_km must be > 0");
}

std::vector<DirectedLink> TopologySnapshot::links() const {
  std::vector<DirectedLink> out;
  for (std::size_t k = 0; k < neighbors.size(); ++k)
    for (std::size_t m : neighbors[k]) out.push_back({k, m});
  return out;
}

double plane_separation(const Vec3& a_pos, const Vec3& a_vel, const Vec3& b_pos, const Vec3& b_vel) {
  const Vec3 ha = a_pos.cross(a_vel);
  const Vec3 hb = b_pos.cross(b_vel);
  const double na = ha.norm(), nb = hb.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("plane_separation: zero angular momentum");
  const Vec3 ua = ha / na, ub = hb / nb;
  // atan2 keeps precision near 0 and pi.
  return std::atan2(ua.cross(ub).norm(), ua.dot(ub));
}

std::vector<std::vector<std::size_t>> select_neighbors(std::span<const Vec3> positions,
                                                       std::span<const Vec3> velocities,
                                                       const NeighborParams& params) {
  const std::size_t n = positions.size();
  if (velocities.size() != n) throw std::invalid_argument("select_neighbors: size mismatch");
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> feasible;
  for (std::size_t k = 0; k < n; ++k) {
    feasible.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const double d = distance(positions[k], positions[j]);
      if (d > params.max_range_km) continue;
      if (plane_separation(positions[k], velocities[k], positions[j], velocities[j]) >
          params.max_plane_angle)
        continue;
      feasible.emplace_back(d, j);
    }
    std::sort(feasible.begin(), feasible.end());
    const std::size_t take = std::min(params.max_neighbors, feasible.size());
    out[k].reserve(take);
    for (std::size_t i = 0; i < take; ++i) out[k].push_back(feasible[i].second);
  }
  return out;
}

bool in_footprint(const Vec3& sat, const Vec3& site, const FootprintParams& fp) {
  const Vec3 los = sat - site;
  const double range = los.norm();
  if (!(range > 0.0)) return false;
  return los.dot(site) / (fp.earth_radius_km * range) >= std::sin(fp.min_elevation);
}

double elevation_angle(const Vec3& sat, const Vec3& site) {
  const Vec3 los = sat - site;
  const double s = los.dot(site) / (los.norm() * site.norm());
  return std::asin(std::clamp(s, -1.0, 1.0));
}

std::optional<std::size_t> associate_gateway(const Vec3& sat, std::span<const Vec3> sites,
                                             const FootprintParams& fp) {
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t g = 0; g < sites.size(); ++g) {
    if (!in_footprint(sat, sites[g], fp)) continue;
    const double d = distance(sat, sites[g]);
    if (!best || d < best_d) {
      best = g;
      best_d = d;
    }
  }
  return best;
}

TopologySnapshot build_snapshot(std::size_t slot, std::span<const Vec3> positions,
                                std::span<const Vec3> velocities, std::span<const Vec3> gateway_sites,
                                const NeighborParams& np, const FootprintParams& fp) {
  TopologySnapshot snap;
  snap.slot = slot;
  snap.neighbors = select_neighbors(positions, velocities, np);
  snap.gateway_of.resize(positions.size());
  snap.visible.resize(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    snap.gateway_of[k] = associate_gateway(positions[k], gateway_sites, fp);
    snap.visible[k] = snap.gateway_of[k].has_value();
  }
  return snap;
}

}  // namespace leosim
