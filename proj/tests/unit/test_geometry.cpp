#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "leosim/environment.hpp"
#include "leosim/geometry.hpp"
#include "leosim/rng.hpp"

using namespace leosim;
using testutil::circular_state;

namespace {

double normal_angle(const Vec3& ra, const Vec3& va, const Vec3& rb, const Vec3& vb) {
  const Vec3 na = ra.cross(va), nb = rb.cross(vb);
  const double c = na.dot(nb) / (na.norm() * nb.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Elevation from the central angle between sub-satellite point and site.
double elevation_oracle(double central, double sat_radius, double earth_radius) {
  return std::atan2(std::cos(central) - earth_radius / sat_radius, std::sin(central));
}

}  // namespace

TEST_CASE("plane separation: closed forms") {
  const auto a = circular_state(6921, 53 * kDegToRad, 0.2, 0.1);
  const auto b = circular_state(6921, 53 * kDegToRad, 0.2, 2.3);
  CHECK(plane_separation(a.r, a.v, b.r, b.v) == doctest::Approx(0.0).epsilon(1e-12));

  const auto eq = circular_state(7000, 0.0, 0.0, 0.4);
  const auto polar = circular_state(7000, kPi / 2, 1.1, 0.9);
  CHECK(plane_separation(eq.r, eq.v, polar.r, polar.v) == doctest::Approx(kPi / 2).epsilon(1e-12));
  const auto retro = circular_state(7000, kPi, 0.0, 0.4);
  CHECK(plane_separation(eq.r, eq.v, retro.r, retro.v) == doctest::Approx(kPi).epsilon(1e-12));

  const double i = 53 * kDegToRad;
  for (double dO : {10.0, 45.0, 120.0, 179.0}) {
    const auto p = circular_state(6921, i, 0.3, 0.5);
    const auto q = circular_state(6921, i, 0.3 + dO * kDegToRad, 1.7);
    const double want = std::acos(std::cos(i) * std::cos(i) + std::sin(i) * std::sin(i) * std::cos(dO * kDegToRad));
    CHECK(std::abs(plane_separation(p.r, p.v, q.r, q.v) - want) < 1e-9);
  }
  CHECK_THROWS(plane_separation(Vec3{1, 0, 0}, Vec3{2, 0, 0}, eq.r, eq.v));
}

TEST_CASE("neighbors: range mask on a collinear triple") {
  const std::vector<Vec3> pos{{7000, 0, 0}, {7100, 0, 0}, {7200, 0, 0}};
  const std::vector<Vec3> vel{{0, 7.5, 0}, {0, 7.4, 0}, {0, 7.3, 0}};
  NeighborParams np{2, 150.0, kPi};
  const auto nb = select_neighbors(pos, vel, np);
  REQUIRE(nb[0].size() == 1);
  CHECK(nb[0][0] == 1);
  CHECK(nb[1] == std::vector<std::size_t>{0, 2});
}

TEST_CASE("neighbors: brute force subset enumeration on random instances") {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec3> pos, vel;
    for (int s = 0; s < 8; ++s) {
      const auto st = circular_state(6900 + 300 * rng.uniform(), kPi * rng.uniform(), kTwoPi * rng.uniform(),
                                     0.6 * rng.uniform());
      pos.push_back(st.r);
      vel.push_back(st.v);
    }
    NeighborParams np{1 + rng.index(5), 2000 + 8000 * rng.uniform(), 0.2 + (kPi - 0.2) * rng.uniform()};
    const auto got = select_neighbors(pos, vel, np);
    for (std::size_t k = 0; k < 8; ++k) {
      std::vector<std::size_t> feas;
      for (std::size_t m = 0; m < 8; ++m)
        if (m != k && distance(pos[k], pos[m]) <= np.max_range_km &&
            normal_angle(pos[k], vel[k], pos[m], vel[m]) <= np.max_plane_angle)
          feas.push_back(m);
      const std::size_t size = std::min(np.max_neighbors, feas.size());
      double best = 1e300;
      std::vector<std::size_t> best_set;
      for (unsigned mask = 0; mask < (1u << feas.size()); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
        double sum = 0;
        std::vector<std::size_t> set;
        for (std::size_t b = 0; b < feas.size(); ++b)
          if (mask & (1u << b)) {
            sum += distance(pos[k], pos[feas[b]]);
            set.push_back(feas[b]);
          }
        if (sum < best) {
          best = sum;
          best_set = set;
        }
      }
      auto g = got[k];
      std::sort(g.begin(), g.end());
      CHECK(g == best_set);
      ++checked;
    }
  }
  CHECK(checked == 8000);
}

TEST_CASE("footprint: zenith, antipode and elevation sweep") {
  const FootprintParams fp;
  const auto site = GroundSite::from_degrees(10.0, 20.0);
  const Vec3 h = ground_site_ecef(site, kEarthRadiusKm);
  CHECK(in_footprint(h * (1 + 550 / kEarthRadiusKm), h, fp));
  CHECK(in_footprint(h * (1 + 550 / kEarthRadiusKm), h, FootprintParams{89.9 * kDegToRad, kEarthRadiusKm}));
  CHECK_FALSE(in_footprint(h * -1.1, h, fp));

  const double rs = kEarthRadiusKm + 550.0;
  int transitions = 0;
  bool prev = true;
  for (int i = 0; i <= 3000; ++i) {
    const double off = i * 0.01 * kDegToRad;  // ground angular offset
    const Vec3 site0{kEarthRadiusKm, 0, 0};
    const Vec3 sat{rs * std::cos(off), rs * std::sin(off), 0};
    const bool got = in_footprint(sat, site0, fp);
    const double el = elevation_oracle(off, rs, kEarthRadiusKm);
    const double el_next = elevation_oracle(off + 0.01 * kDegToRad, rs, kEarthRadiusKm);
    const double el_prev = elevation_oracle(std::max(0.0, off - 0.01 * kDegToRad), rs, kEarthRadiusKm);
    const bool near_crossing = (el_prev - fp.min_elevation) * (el_next - fp.min_elevation) <= 0;
    if (!near_crossing) CHECK(got == (el >= fp.min_elevation));
    CHECK(elevation_angle(sat, site0) == doctest::Approx(el).epsilon(1e-9));
    if (got != prev) ++transitions;
    prev = got;
  }
  CHECK(transitions == 1);
}

TEST_CASE("gateway association") {
  const FootprintParams fp;
  const Vec3 sat{kEarthRadiusKm + 550, 0, 0};
  std::vector<Vec3> far{{-kEarthRadiusKm, 0, 0}};
  CHECK_FALSE(associate_gateway(sat, far, fp).has_value());
  std::vector<Vec3> one{{-kEarthRadiusKm, 0, 0}, {kEarthRadiusKm, 0, 0}};
  CHECK(associate_gateway(sat, one, fp) == std::optional<std::size_t>{1});

  // sites on the circle through the sub-satellite point at slant ranges 1200 and 800 km
  auto site_at_range = [&](double range) {
    const double r = sat.x;
    const double c = (r * r + kEarthRadiusKm * kEarthRadiusKm - range * range) / (2 * r * kEarthRadiusKm);
    const double g = std::acos(c);
    return Vec3{kEarthRadiusKm * std::cos(g), kEarthRadiusKm * std::sin(g), 0};
  };
  const FootprintParams low{10.0 * kDegToRad, kEarthRadiusKm};
  std::vector<Vec3> two{site_at_range(1200), site_at_range(800)};
  CHECK(distance(sat, two[0]) == doctest::Approx(1200));
  REQUIRE(in_footprint(sat, two[0], low));
  REQUIRE(in_footprint(sat, two[1], low));
  CHECK(associate_gateway(sat, two, low) == std::optional<std::size_t>{1});
}

TEST_CASE("snapshot invariants on the shipped scenario") {
  auto cfg = testutil::fixture_config();
  cfg.grid.num_slots = 30;
  const Scenario sc(cfg);
  std::vector<Vec3> gw;
  for (const auto& g : sc.gateways())
    gw.push_back(ground_site_ecef(GroundSite::from_degrees(g.latitude_deg, g.longitude_deg), kEarthRadiusKm));
  for (std::size_t t = 0; t < sc.num_slots(); ++t) {
    const auto& snap = sc.snapshot(t);
    const auto pos = sc.positions(t);
    const auto vel = sc.velocities(t);
    for (std::size_t k = 0; k < snap.num_satellites(); ++k) {
      CHECK(snap.neighbors[k].size() <= cfg.neighbors.max_neighbors);
      for (auto m : snap.neighbors[k]) {
        CHECK(m != k);
        CHECK(distance(pos[k], pos[m]) <= cfg.neighbors.max_range_km);
        CHECK(normal_angle(pos[k], vel[k], pos[m], vel[m]) <= cfg.neighbors.max_plane_angle + 1e-12);
      }
      // association iff some gateway is in the footprint
      const Vec3 ecef = eci_to_ecef(pos[k], cfg.grid.time_at(t));
      bool any = false;
      for (const auto& g : gw) any = any || in_footprint(ecef, g, cfg.footprint);
      CHECK(any == snap.visible[k]);
      CHECK(snap.gateway_of[k].has_value() == snap.visible[k]);
    }
    const auto links = snap.links();
    std::size_t total = 0;
    for (const auto& nb : snap.neighbors) total += nb.size();
    CHECK(links.size() == total);
  }
}

TEST_CASE("neighbors: enlarging masks never shrinks short lists") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> pos, vel;
    for (int s = 0; s < 10; ++s) {
      const auto st = circular_state(6921, kPi * rng.uniform(), kTwoPi * rng.uniform(), 0.8 * rng.uniform());
      pos.push_back(st.r);
      vel.push_back(st.v);
    }
    NeighborParams small{6, 1500 + 2000 * rng.uniform(), 0.3 + rng.uniform()};
    NeighborParams big = small;
    big.max_range_km *= 1.5;
    big.max_plane_angle = std::min(kPi, big.max_plane_angle * 1.5);
    const auto a = select_neighbors(pos, vel, small);
    const auto b = select_neighbors(pos, vel, big);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      if (a[k].size() >= small.max_neighbors) continue;
      CHECK(b[k].size() >= a[k].size());
    }
  }
}
