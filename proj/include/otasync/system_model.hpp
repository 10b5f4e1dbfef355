#pragma once

#include <cmath>
#include <stdexcept>

#include "otasync/complex_linalg.hpp"
#include "otasync/rng.hpp"

namespace otasync {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

// Per-antenna transmit/receive complex gains of one node's RF chains.
struct RfChain {
  CVec t;
  CVec r;

  std::size_t antennas() const { return t.size(); }
};

struct NodeConfig {
  int antennas = 1;
  int ref_index = 0;
  double tx_power_w = 0.1;
};

// One block-fading realization of all reciprocal links. The same instance is
// consumed by every stage of a trial; there is no redraw between stages.
struct ChannelSet {
  CVec g_a;   // AP-A <-> repeater
  CVec g_b;   // AP-B <-> repeater
  CVec h_a;   // AP-A <-> UE (only when the CJT metric is requested)
  CVec h_b;   // AP-B <-> UE
  CMat h_ab;  // AP-A <-> AP-B (direct baseline only)
};

struct NoiseModel {
  double temperature_k = 290.0;
  double bandwidth_hz = 20e6;
  double noise_figure_db = 9.0;

  double variance_w() const {
    if (temperature_k <= 0 || bandwidth_hz < 0)
      throw std::invalid_argument("NoiseModel: non-positive temperature/bandwidth");
    return kBoltzmann * temperature_k * bandwidth_hz *
           std::pow(10.0, noise_figure_db / 10.0);
  }
};

inline double path_loss_db(double d_m) {
  if (d_m <= 0) throw std::invalid_argument("path_loss_db: d <= 0");
  return -30.5 - 36.7 * std::log10(d_m);
}

inline double path_loss_linear(double d_m) {
  return std::pow(10.0, path_loss_db(d_m) / 10.0);
}

enum class GainModel { kUnitMagnitude, kMagnitudeBand };

struct GainSpec {
  GainModel model = GainModel::kUnitMagnitude;
  double lo = 0.9;  // magnitude band bounds (kMagnitudeBand only)
  double hi = 1.1;
};

// RF-chain gains: phase uniform on [0, 2pi); magnitude 1 or uniform in [lo, hi].
inline RfChain draw_rf_chain(const NodeConfig& cfg, const GainSpec& gains,
                             RandomStream& rng) {
  if (cfg.antennas < 1 || cfg.ref_index < 0 || cfg.ref_index >= cfg.antennas)
    throw std::invalid_argument("draw_rf_chain: bad antenna/ref configuration");
  if (gains.model == GainModel::kMagnitudeBand &&
      (gains.lo <= 0 || gains.hi < gains.lo))
    throw std::invalid_argument("draw_rf_chain: bad magnitude band");
  auto draw = [&](CVec& v) {
    v.resize(cfg.antennas);
    for (auto& z : v) {
      const double mag = gains.model == GainModel::kUnitMagnitude
                             ? 1.0
                             : rng.uniform(gains.lo, gains.hi);
      z = std::polar(mag, rng.angle());
    }
  };
  RfChain chain;
  draw(chain.t);
  draw(chain.r);
  return chain;
}

// Rayleigh-fading link: i.i.d. CN(0, beta) with beta from the path-loss model.
inline CVec draw_channel(std::size_t n, double d_m, RandomStream& rng) {
  return complex_gaussian_vector(n, path_loss_linear(d_m), rng);
}

// theta = (angle tB - angle rB) - (angle tA - angle rA) at the reference antennas.
inline double true_phase_offset(const RfChain& ap_a, int ref_a,
                                const RfChain& ap_b, int ref_b) {
  const double pa = std::arg(ap_a.t[ref_a]) - std::arg(ap_a.r[ref_a]);
  const double pb = std::arg(ap_b.t[ref_b]) - std::arg(ap_b.r[ref_b]);
  return wrap_angle(pb - pa);
}

}  // namespace otasync
