#include "leosim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "leosim/constants.hpp"

namespace leosim {

void LgChannelParams::validate() const {
  if (!(tx_power_w > 0 && path_loss_exp > 0 && noise_var_w > 0 && bandwidth_hz > 0 && packet_bits > 0))
    throw std::invalid_argument("lg channel: all parameters must be strictly positive");
}

void ShadowedRicianParams::validate() const {
  if (!(b0 > 0.0) || !(m > 0.0) || !(omega >= 0.0))
    throw std::invalid_argument("shadowed-Rician: need b0 > 0, m > 0, omega >= 0");
}

void IslChannelParams::validate() const {
  if (!(tx_power_w > 0 && tx_gain > 0 && rx_gain > 0 && carrier_wavelength_m > 0 && boltzmann > 0 &&
        sys_noise_temp_k > 0 && bandwidth_hz > 0))
    throw std::invalid_argument("isl channel: all parameters must be strictly positive");
}

ShadowingTable ShadowingTable::uniform_default() {
  std::vector<Band> bands;
  for (int deg = 10; deg < 90; deg += 10) bands.push_back({static_cast<double>(deg), {}});
  return ShadowingTable(std::move(bands));
}

ShadowingTable::ShadowingTable(std::vector<Band> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw std::invalid_argument("shadowing table needs at least one band");
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    bands_[i].params.validate();
    if (i > 0 && !(bands_[i].lower_deg > bands_[i - 1].lower_deg))
      throw std::invalid_argument("shadowing table bands must ascend in elevation");
  }
}

const ShadowedRicianParams& ShadowingTable::lookup(double elevation_rad) const {
  const double deg = elevation_rad * kRadToDeg;
  auto it = std::upper_bound(bands_.begin(), bands_.end(), deg,
                             [](double d, const Band& b) { return d < b.lower_deg; });
  if (it == bands_.begin()) return bands_.front().params;
  return std::prev(it)->params;
}

double lg_mean_snr(const Vec3& sat, const Vec3& gateway, const LgChannelParams& p) {
  const double d = distance(sat, gateway);
  if (!(d > 0.0)) throw std::invalid_argument("lg_mean_snr: coincident points");
  return p.tx_power_w * std::pow(d, -p.path_loss_exp) / p.noise_var_w;
}

double sample_fading(const ShadowedRicianParams& p, Rng& rng) {
  const double sd = std::sqrt(p.b0);
  const double re = rng.normal() * sd;
  const double im = rng.normal() * sd;
  const double w = p.omega > 0.0 ? rng.gamma(p.m, p.omega / p.m) : 0.0;
  const double theta = kTwoPi * rng.uniform();
  const double a = std::sqrt(w);
  const double x = re + a * std::cos(theta);
  const double y = im + a * std::sin(theta);
  return x * x + y * y;
}

double lg_capacity_packets(double mean_snr, double kappa, const LgChannelParams& p,
                           double slot_seconds) {
  return p.packets_per_bit_per_hz(slot_seconds) * std::log2(1.0 + kappa * mean_snr);
}

double isl_snr(const Vec3& a, const Vec3& b, const IslChannelParams& p) {
  const double d_m = distance(a, b) * 1000.0;
  if (!(d_m > 0.0)) throw std::invalid_argument("isl_snr: coincident points");
  const double ratio = p.carrier_wavelength_m / (4.0 * kPi * d_m);
  return p.tx_power_w * p.tx_gain * p.rx_gain * ratio * ratio /
         (p.boltzmann * p.sys_noise_temp_k * p.bandwidth_hz);
}

double isl_capacity_packets(double snr, const IslChannelParams& p, double packet_bits,
                            double slot_seconds) {
  return p.bandwidth_hz * slot_seconds / packet_bits * std::log2(1.0 + snr);
}

}  // namespace leosim
