#pragma once

#include <vector>

#include "leosim/rng.hpp"
#include "leosim/vec3.hpp"

namespace leosim {

/// Link-to-ground parameters. Distances enter the path-loss term in km.
struct LgChannelParams {
  double tx_power_w = 10.0;
  double path_loss_exp = 2.0;
  double noise_var_w = 1e-6;
  double bandwidth_hz = 1e5;
  double packet_bits = 12000.0;

  /// D^LG = B * dt / L_pkt
  double packets_per_bit_per_hz(double slot_seconds) const {
    return bandwidth_hz * slot_seconds / packet_bits;
  }
  void validate() const;
};

/// Loo-model triple: b0 is the half scatter power, m the Nakagami shape of the
/// line-of-sight amplitude, omega the mean line-of-sight power.
struct ShadowedRicianParams {
  double b0 = 0.126;
  double m = 10.1;
  double omega = 0.835;

  double mean_power() const { return 2.0 * b0 + omega; }
  void validate() const;
};

/// Inter-satellite free-space link. The wavelength ratio uses meters.
struct IslChannelParams {
  double tx_power_w = 1.0;
  double tx_gain = 1000.0;
  double rx_gain = 1000.0;
  double carrier_wavelength_m = 0.0107;
  double boltzmann = 1.380649e-23;
  double sys_noise_temp_k = 300.0;
  double bandwidth_hz = 1e6;

  void validate() const;
};

/// Elevation bands mapped to shadowing triples. Band i covers
/// [lower_deg[i], lower_deg[i+1]); elevations below the first band use it.
class ShadowingTable {
 public:
  struct Band {
    double lower_deg;
    ShadowedRicianParams params;
  };

  /// 10..80 degree bands in 10 degree steps, all set to the average-shadowing triple.
  static ShadowingTable uniform_default();

  explicit ShadowingTable(std::vector<Band> bands);
  const ShadowedRicianParams& lookup(double elevation_rad) const;
  const std::vector<Band>& bands() const { return bands_; }

 private:
  std::vector<Band> bands_;
};

/// P_tx * D^-eta / sigma^2 with D in km. Throws on coincident points.
double lg_mean_snr(const Vec3& sat, const Vec3& gateway, const LgChannelParams& p);

/// kappa = |scatter + sqrt(w) e^{j theta}|^2 with scatter ~ CN(0, 2 b0),
/// w ~ Gamma(m, omega / m), theta ~ U[0, 2 pi).
double sample_fading(const ShadowedRicianParams& p, Rng& rng);

/// D^LG * log2(1 + kappa * mean_snr)
double lg_capacity_packets(double mean_snr, double kappa, const LgChannelParams& p,
                           double slot_seconds);

/// P G_tx G_rx (lambda / (4 pi D))^2 / (k_B T_s B). Positions in km.
double isl_snr(const Vec3& a, const Vec3& b, const IslChannelParams& p);

/// D^ISL * log2(1 + snr), D^ISL = B^ISL * dt / L_pkt
double isl_capacity_packets(double snr, const IslChannelParams& p, double packet_bits,
                            double slot_seconds);

}  // namespace leosim
