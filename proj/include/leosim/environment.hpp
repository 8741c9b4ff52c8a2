#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leosim/channel.hpp"
#include "leosim/config.hpp"
#include "leosim/geometry.hpp"
#include "leosim/orbits.hpp"
#include "leosim/policies.hpp"
#include "leosim/rng.hpp"
#include "leosim/traffic.hpp"

namespace leosim {

struct Gateway {
  int id = 0;
  std::string name;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  std::string region;
};

/// CSV rows "id,name,lat_deg,lon_deg[,region]"; '#' lines and blank lines are
/// skipped. Result is sorted by id.
std::vector<Gateway> load_gateways(const std::filesystem::path& path);

/// "hybrid" keeps every gateway; "asia", "europe", "north-america" (and any
/// other region tag present in the file) keep that region only.
std::vector<Gateway> gateway_preset(const std::vector<Gateway>& all, const std::string& preset);

/// Everything about a run that does not depend on the seed: orbits, topology,
/// mean channel gains, and arrival rates for every slot.
class Scenario {
 public:
  explicit Scenario(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  std::size_t num_satellites() const { return num_sats_; }
  std::size_t num_slots() const { return cfg_.grid.num_slots; }
  double slot_seconds() const { return cfg_.grid.slot_seconds; }
  const std::vector<Gateway>& gateways() const { return gateways_; }
  const std::vector<TleRecord>& satellites() const { return tles_; }

  const TopologySnapshot& snapshot(std::size_t t) const { return slots_[t].snapshot; }
  std::span<const DirectedLink> links(std::size_t t) const { return slots_[t].links; }
  std::span<const double> isl_caps(std::size_t t) const { return slots_[t].isl_caps; }
  std::span<const Vec3> positions(std::size_t t) const { return slots_[t].positions; }
  std::span<const Vec3> velocities(std::size_t t) const { return slots_[t].velocities; }
  /// Mean LG SNR toward the associated gateway; 0 when none is visible.
  double lg_mean_snr(std::size_t t, std::size_t k) const { return slots_[t].lg_mean_snr[k]; }
  double elevation(std::size_t t, std::size_t k) const { return slots_[t].elevation[k]; }
  double arrival_rate(std::size_t t, std::size_t k) const { return slots_[t].arrival_rate[k]; }
  const ShadowedRicianParams& shadowing(std::size_t t, std::size_t k) const;

  /// D^ISL and D^LG in packets per unit spectral efficiency.
  double isl_packet_scale() const;
  double lg_packet_scale() const;

 private:
  struct Slot {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    TopologySnapshot snapshot;
    std::vector<DirectedLink> links;
    std::vector<double> isl_caps;
    std::vector<double> lg_mean_snr;
    std::vector<double> elevation;
    std::vector<double> arrival_rate;
  };

  RunConfig cfg_;
  std::size_t num_sats_ = 0;
  std::vector<TleRecord> tles_;
  std::vector<Gateway> gateways_;
  ShadowingTable shadowing_;
  std::vector<Slot> slots_;
};

/// Random realization of one slot, drawn in (fading for every satellite in id
/// order, then arrivals in id order).
struct SlotDraws {
  std::vector<double> fading;
  std::vector<std::int64_t> arrivals;
  std::vector<double> lg_caps;  // 0 when no gateway is visible
};

SlotDraws draw_slot(const Scenario& sc, std::size_t t, Rng& env_rng);

inline PolicyInput make_policy_input(const Scenario& sc, std::size_t t, const QueueState& q,
                                     const SlotDraws& draws) {
  return PolicyInput{q, sc.snapshot(t), sc.links(t), sc.isl_caps(t), draws.lg_caps};
}

}  // namespace leosim
