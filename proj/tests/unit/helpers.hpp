#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "leosim/config.hpp"
#include "leosim/constants.hpp"
#include "leosim/geometry.hpp"
#include "leosim/queueing.hpp"
#include "leosim/vec3.hpp"

namespace testutil {

inline std::filesystem::path source_dir() { return LEOSIM_SOURCE_DIR; }
inline std::filesystem::path data_path(const std::string& name) { return source_dir() / "data" / name; }

inline leosim::RunConfig fixture_config() { return leosim::load_config(source_dir() / "configs" / "fixture.json"); }

// Circular orbit state at argument of latitude u, built directly from the
// rotation R3(-raan) R1(-inc).
struct State {
  leosim::Vec3 r, v;
};

inline State circular_state(double a_km, double inc, double raan, double u) {
  const double speed = std::sqrt(leosim::kMuEarth / a_km);
  const double cO = std::cos(raan), sO = std::sin(raan), ci = std::cos(inc), si = std::sin(inc);
  auto rot = [&](double x, double y) {
    return leosim::Vec3{cO * x - sO * ci * y, sO * x + cO * ci * y, si * y};
  };
  return {rot(a_km * std::cos(u), a_km * std::sin(u)) , rot(-speed * std::sin(u), speed * std::cos(u))};
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("leosim_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
