#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "leosim/constants.hpp"
#include "leosim/vec3.hpp"

namespace leosim {

struct NeighborParams {
  std::size_t max_neighbors = 4;   // M
  double max_range_km = 5000.0;    // R_max
  double max_plane_angle = kPi;    // Theta, rad in (0, pi]

  void validate() const;
};

struct FootprintParams {
  double min_elevation = 25.0 * kDegToRad;  // rad in [0, pi/2)
  double earth_radius_km = kEarthRadiusKm;

  void validate() const;
};

/// A directed inter-satellite link k -> m.
struct DirectedLink {
  std::size_t from = 0;
  std::size_t to = 0;
  constexpr bool operator==(const DirectedLink&) const = default;
};

struct TopologySnapshot {
  std::size_t slot = 0;
  /// neighbors[k]: feasible neighbors of k, ascending distance then id.
  std::vector<std::vector<std::size_t>> neighbors;
  /// Associated gateway index per satellite, present iff visible.
  std::vector<std::optional<std::size_t>> gateway_of;
  std::vector<bool> visible;

  std::size_t num_satellites() const { return neighbors.size(); }
  /// Links flattened in (k ascending, neighbor-list order). Per-link arrays
  /// used by channel/policy/queueing code are aligned with this order.
  std::vector<DirectedLink> links() const;
};

/// Angle in [0, pi] between the orbital-plane normals r x v of two satellites.
/// Throws std::invalid_argument when either angular momentum vanishes.
double plane_separation(const Vec3& a_pos, const Vec3& a_vel, const Vec3& b_pos, const Vec3& b_vel);

/// Per satellite: the min(M, |F|) closest satellites among those within range
/// and plane-angle masks. Picking the M smallest feasible distances minimizes
/// the summed distance over all size-M feasible subsets.
std::vector<std::vector<std::size_t>> select_neighbors(std::span<const Vec3> positions,
                                                       std::span<const Vec3> velocities,
                                                       const NeighborParams& params);

/// (l - h) . h / (R_E |l - h|) >= sin(eps_min)
bool in_footprint(const Vec3& sat, const Vec3& site, const FootprintParams& fp);

/// Elevation of the satellite above the site's local horizon, radians.
double elevation_angle(const Vec3& sat, const Vec3& site);

/// Closest visible gateway (index into sites); ties go to the lower index.
std::optional<std::size_t> associate_gateway(const Vec3& sat, std::span<const Vec3> sites,
                                             const FootprintParams& fp);

TopologySnapshot build_snapshot(std::size_t slot, std::span<const Vec3> positions,
                                std::span<const Vec3> velocities, std::span<const Vec3> gateway_sites,
                                const NeighborParams& np, const FootprintParams& fp);

}  // namespace leosim
