#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "otasync/complex_linalg.hpp"
#include "otasync/system_model.hpp"

namespace otasync {

// Magnitude below which a test statistic carries no usable phase.
inline constexpr double kMagnitudeFloor = 1e-30;

struct Node {
  RfChain chain;
  NodeConfig cfg;

  cdouble t_ref() const { return chain.t[cfg.ref_index]; }
  cdouble r_ref() const { return chain.r[cfg.ref_index]; }
};

struct CalibrationCoeffs {
  CVec coeffs;
  int ref_index = 0;
};

// Synchronization signal x with ||x||^2 = L.
struct PilotSignal {
  CVec x;

  static PilotSignal all_ones(std::size_t length) {
    if (length < 1) throw std::invalid_argument("PilotSignal: L < 1");
    return PilotSignal{CVec(length, cdouble{1.0, 0.0})};
  }
  std::size_t length() const { return x.size(); }
};

struct SyncOutcome {
  double theta_true = 0;
  double theta_hat = 0;
  double error = 0;  // wrap_angle(theta_hat - theta_true)
  cdouble y{};       // test statistic
  double c = 0;      // amplitude constant, >= 0
  double snr_proxy = std::numeric_limits<double>::infinity();
  bool unresolvable = false;
};

enum class AgcMode {
  kLiteral,   // forward gain sqrt(rho_R) * t_R applied verbatim
  kAnalytic,  // normalize by the analytic per-symbol received power
};

enum class CMode { kAnalytic, kEmpirical };

enum class NoisePlacement {
  kEverywhere,    // AWGN at the repeater and at both APs
  kRepeaterOnly,  // AWGN at the repeater only (reproduces reported curves)
};

struct ProtocolOptions {
  AgcMode agc = AgcMode::kLiteral;
  CMode c_mode = CMode::kAnalytic;
  NoisePlacement placement = NoisePlacement::kEverywhere;
};

// D_r * g, the channel seen through the receive RF chains.
inline CVec effective_channel(const RfChain& chain, const CVec& g) {
  if (chain.r.size() != g.size())
    throw std::invalid_argument("effective_channel: dimension mismatch");
  CVec out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = chain.r[i] * g[i];
  return out;
}

// --- intra-AP reciprocity calibration -------------------------------------

// coeffs[i] = (t_ref / r_ref) * (r_i / t_i); identity at the reference antenna.
inline CalibrationCoeffs intra_ap_coeffs(const RfChain& chain, int ref_index) {
  const std::size_t m = chain.antennas();
  if (ref_index < 0 || static_cast<std::size_t>(ref_index) >= m)
    throw std::invalid_argument("intra_ap_coeffs: bad reference index");
  for (std::size_t i = 0; i < m; ++i)
    if (std::abs(chain.t[i]) == 0 || std::abs(chain.r[i]) == 0)
      throw std::invalid_argument("intra_ap_coeffs: zero RF gain");
  const cdouble ratio = chain.t[ref_index] / chain.r[ref_index];
  CalibrationCoeffs cal;
  cal.ref_index = ref_index;
  cal.coeffs.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    cal.coeffs[i] = ratio * chain.r[i] / chain.t[i];
  cal.coeffs[ref_index] = 1.0;
  return cal;
}

// Per-antenna signal at a single-antenna UE after conjugate retransmission,
// noiseless. With calibration applied all entries share one phase.
inline CVec ue_receive_calibrated(const RfChain& chain,
                                  const CalibrationCoeffs& cal, const CVec& h,
                                  const RfChain& ue, int ue_ref = 0) {
  const std::size_t m = chain.antennas();
  if (h.size() != m || cal.coeffs.size() != m)
    throw std::invalid_argument("ue_receive_calibrated: dimension mismatch");
  const cdouble tu = ue.t[ue_ref], ru = ue.r[ue_ref];
  CVec y(m);
  for (std::size_t i = 0; i < m; ++i)
    y[i] = ru * h[i] * chain.t[i] * cal.coeffs[i] *
           std::conj(chain.r[i] * h[i] * tu);
  return y;
}

// --- direct AP-to-AP baseline (noiseless) ----------------------------------

// Two-stage bidirectional exchange over the direct channel H. Returns the
// angle of f^T y_B, which equals (tA - rA) - (tB - rB) phase difference:
// the negative of the repeater protocol's target.
inline double beamsync_direct(const CMat& h_ab, const Node& ap_a,
                              const Node& ap_b, const CVec& f) {
  const std::size_t ma = ap_a.chain.antennas(), mb = ap_b.chain.antennas();
  if (h_ab.rows != ma || h_ab.cols != mb || f.size() != mb)
    throw std::invalid_argument("beamsync_direct: dimension mismatch");

  CMat ht(ma, mb);  // D_rA * H * D_rB
  for (std::size_t i = 0; i < ma; ++i)
    for (std::size_t j = 0; j < mb; ++j)
      ht(i, j) = ap_a.chain.r[i] * h_ab(i, j) * ap_b.chain.r[j];

  const cdouble cal_a = ap_a.t_ref() / ap_a.r_ref();
  const cdouble cal_b = ap_b.t_ref() / ap_b.r_ref();

  CVec u(ma);  // stage-I arrival at A (up to the cal_b factor applied below)
  for (std::size_t i = 0; i < ma; ++i) {
    cdouble s = 0;
    for (std::size_t j = 0; j < mb; ++j) s += ht(i, j) * f[j];
    u[i] = cal_b * s;
  }
  CVec y_b(mb);  // stage-II: A returns the conjugate
  for (std::size_t j = 0; j < mb; ++j) {
    cdouble s = 0;
    for (std::size_t i = 0; i < ma; ++i) s += ht(i, j) * std::conj(u[i]);
    y_b[j] = cal_a * s;
  }
  const cdouble stat = dot_t(f, y_b);
  if (std::abs(stat) < kMagnitudeFloor)
    throw std::domain_error("beamsync_direct: degenerate statistic");
  return std::arg(stat);
}

// --- beamformer acquisition -------------------------------------------------

// f such that f^T g_eff is maximal in magnitude: the conjugate of the
// dominant left singular vector of the received pilot block.
inline CVec acquire_beamformer(const CMat& pilot_rx, double tol = 1e-10,
                               int max_iters = 200) {
  auto res = dominant_left_singular_vector(pilot_rx, tol, max_iters);
  if (!res.converged)
    res = dominant_left_singular_vector(pilot_rx, tol, 10 * max_iters);
  if (!res.converged)
    throw std::runtime_error("acquire_beamformer: power iteration stalled");
  CVec f = std::move(res.vector);
  for (auto& z : f) z = std::conj(z);
  return f;
}

// Exact dominant direction, conj(g_eff)/||g_eff||.
inline CVec genie_beamformer(const CVec& g_eff) {
  const double n = norm(g_eff);
  if (n == 0) throw std::invalid_argument("genie_beamformer: zero channel");
  CVec f(g_eff.size());
  for (std::size_t i = 0; i < g_eff.size(); ++i) f[i] = std::conj(g_eff[i]) / n;
  return f;
}

// --- repeater-aided synchronization, noiseless scalar chain -----------------

// Four-message exchange with a scalar pilot x = 1. Exact: theta_hat equals
// the true offset and |y| matches the closed-form constant.
inline SyncOutcome repeater_sync_noiseless(const Node& ap_a, const Node& ap_b,
                                           const Node& repeater,
                                           const ChannelSet& channels,
                                           const CVec& f_a, const CVec& f_b) {
  const CVec gt_a = effective_channel(ap_a.chain, channels.g_a);
  const CVec gt_b = effective_channel(ap_b.chain, channels.g_b);
  const cdouble t_r = repeater.chain.t[0], r_r = repeater.chain.r[0];
  const cdouble cal_a = ap_a.t_ref() / ap_a.r_ref();
  const cdouble cal_b = ap_b.t_ref() / ap_b.r_ref();

  const cdouble ga_fa = dot_t(gt_a, f_a);
  const cdouble fb_gb = dot_t(f_b, gt_b);

  SyncOutcome out;
  out.theta_true = true_phase_offset(ap_a.chain, ap_a.cfg.ref_index,
                                     ap_b.chain, ap_b.cfg.ref_index);
  if (std::abs(ga_fa) < 1e-15 * norm(gt_a) ||
      std::abs(fb_gb) < 1e-15 * norm(gt_b)) {
    out.unresolvable = true;
    return out;
  }

  const cdouble y_r1 = cal_a * r_r * ga_fa;
  const cdouble y_b2 = fb_gb * t_r * y_r1;
  const cdouble x_b = std::conj(y_b2);
  const cdouble y_r3 = cal_b * r_r * dot_t(gt_b, f_b) * x_b;
  const cdouble y_a4 = dot_t(f_a, gt_a) * t_r * y_r3;

  out.y = y_a4;
  out.c = std::abs(cal_a) * std::abs(cal_b) * std::norm(ga_fa) *
          std::norm(fb_gb) * std::norm(t_r) * std::norm(r_r);
  if (std::abs(y_a4) < kMagnitudeFloor) {
    out.unresolvable = true;
    return out;
  }
  out.theta_hat = std::arg(y_a4);
  out.error = wrap_angle(out.theta_hat - out.theta_true);
  return out;
}

// --- repeater-aided synchronization, noisy two-stage protocol ---------------

struct Stage1Result {
  CVec y_r1;  // received at the repeater
  CVec y_b;   // received at AP-B after combining

  // Context for the normalizer, stage II, and the closed-form constant.
  cdouble coeff_s{};   // scalar multiplying x at the repeater
  cdouble gain_q1{};   // repeater forward gain (includes t_R)
  cdouble coeff_a{};   // gain_q1 * f_B^T g_eff_B
  cdouble ga_fa{};     // f_A^T g_eff_A
  cdouble fb_gb{};     // f_B^T g_eff_B
  double sigma2_r = 0;
  double sigma2_ap = 0;
  std::size_t length = 0;
};

namespace detail {

inline CVec add_noise(CVec v, double sigma2, RandomStream& rng) {
  if (sigma2 > 0)
    for (auto& z : v) z += rng.complex_gaussian(sigma2);
  return v;
}

}  // namespace detail

// Stage I: AP-A beamforms x to the repeater, which forwards to AP-B.
inline Stage1Result repeater_sync_stage1(const PilotSignal& x, const CVec& f_a,
                                         const Node& ap_a, const Node& repeater,
                                         const ChannelSet& channels,
                                         const CVec& f_b, const Node& ap_b,
                                         double sigma2,
                                         const ProtocolOptions& opts,
                                         RandomStream& rng) {
  const CVec gt_a = effective_channel(ap_a.chain, channels.g_a);
  const CVec gt_b = effective_channel(ap_b.chain, channels.g_b);
  const cdouble t_r = repeater.chain.t[0], r_r = repeater.chain.r[0];
  const double rho_a = ap_a.cfg.tx_power_w;
  const double rho_r = repeater.cfg.tx_power_w;

  Stage1Result res;
  res.length = x.length();
  res.sigma2_r = sigma2;
  res.sigma2_ap = opts.placement == NoisePlacement::kEverywhere ? sigma2 : 0.0;
  res.ga_fa = dot_t(gt_a, f_a);
  res.fb_gb = dot_t(f_b, gt_b);
  res.coeff_s =
      std::sqrt(rho_a) * (ap_a.t_ref() / ap_a.r_ref()) * r_r * res.ga_fa;

  CVec y_r1(x.length());
  for (std::size_t l = 0; l < x.length(); ++l) y_r1[l] = res.coeff_s * x.x[l];
  res.y_r1 = detail::add_noise(std::move(y_r1), res.sigma2_r, rng);

  if (opts.agc == AgcMode::kLiteral) {
    res.gain_q1 = std::sqrt(rho_r) * t_r;
  } else {
    const double p_in = std::norm(res.coeff_s) + res.sigma2_r;
    res.gain_q1 = std::sqrt(rho_r / std::max(p_in, kMagnitudeFloor)) * t_r;
  }
  res.coeff_a = res.gain_q1 * res.fb_gb;

  CVec y_b(x.length());
  for (std::size_t l = 0; l < x.length(); ++l) y_b[l] = res.coeff_a * res.y_r1[l];
  res.y_b = detail::add_noise(std::move(y_b), res.sigma2_ap, rng);
  return res;
}

// E{||y_B||^2} conditioned on the drawn channels and gains.
inline double analytic_normalizer_c(const Stage1Result& s1) {
  const double len = static_cast<double>(s1.length);
  return std::norm(s1.coeff_a) * (std::norm(s1.coeff_s) + s1.sigma2_r) * len +
         s1.sigma2_ap * len;
}

inline double power_normalizer_c(const Stage1Result& s1,
                                 CMode mode = CMode::kAnalytic) {
  if (mode == CMode::kEmpirical) return norm2(s1.y_b);
  return analytic_normalizer_c(s1);
}

// Stage II: AP-B conjugates and returns the stage-I signal via the repeater;
// AP-A combines and correlates with x to form the test statistic.
inline SyncOutcome repeater_sync_stage2(const Stage1Result& s1, double c_norm,
                                        const CVec& f_b, const Node& ap_b,
                                        const Node& repeater,
                                        const ChannelSet& channels,
                                        const CVec& f_a, const Node& ap_a,
                                        const PilotSignal& x,
                                        const ProtocolOptions& opts,
                                        RandomStream& rng) {
  if (!(c_norm > 0))
    throw std::invalid_argument("repeater_sync_stage2: normalizer must be > 0");
  const CVec gt_a = effective_channel(ap_a.chain, channels.g_a);
  const cdouble t_r = repeater.chain.t[0], r_r = repeater.chain.r[0];
  const double rho_b = ap_b.cfg.tx_power_w;
  const double rho_r = repeater.cfg.tx_power_w;
  const double len = static_cast<double>(s1.length);

  const cdouble k2 = std::sqrt(len / c_norm) * std::sqrt(rho_b) *
                     (ap_b.t_ref() / ap_b.r_ref()) * r_r *
                     dot_t(effective_channel(ap_b.chain, channels.g_b), f_b);

  CVec y_r2(s1.length);
  for (std::size_t l = 0; l < s1.length; ++l)
    y_r2[l] = k2 * std::conj(s1.y_b[l]);
  y_r2 = detail::add_noise(std::move(y_r2), s1.sigma2_r, rng);

  cdouble q2;
  if (opts.agc == AgcMode::kLiteral) {
    q2 = std::sqrt(rho_r) * t_r;
  } else {
    // Expected per-symbol power arriving at the repeater in stage II.
    const double p_in =
        std::norm(k2) * (analytic_normalizer_c(s1) / len) + s1.sigma2_r;
    q2 = std::sqrt(rho_r / std::max(p_in, kMagnitudeFloor)) * t_r;
  }

  // y = f_A^T (q2 * gt_a * y_r2^T + W) x, accumulated without materializing
  // the M x L matrix.
  cdouble yr2_x = dot_t(y_r2, x.x);
  cdouble y = q2 * dot_t(f_a, gt_a) * yr2_x;
  if (s1.sigma2_ap > 0) {
    for (std::size_t m = 0; m < gt_a.size(); ++m) {
      cdouble wx = 0;
      for (std::size_t l = 0; l < s1.length; ++l)
        wx += rng.complex_gaussian(s1.sigma2_ap) * x.x[l];
      y += f_a[m] * wx;
    }
  }

  SyncOutcome out;
  out.theta_true = true_phase_offset(ap_a.chain, ap_a.cfg.ref_index,
                                     ap_b.chain, ap_b.cfg.ref_index);
  out.y = y;

  // Closed-form amplitude constant of the noise-free statistic.
  out.c = std::sqrt(len / c_norm) * len * std::abs(s1.gain_q1) * std::abs(q2) *
          std::sqrt(ap_a.cfg.tx_power_w * rho_b) * std::norm(r_r) *
          (std::abs(ap_a.t_ref()) * std::abs(ap_b.t_ref()) /
           (std::abs(ap_a.r_ref()) * std::abs(ap_b.r_ref()))) *
          std::norm(s1.ga_fa) * std::norm(s1.fb_gb);

  // Composite noise variance of y, conditioned on the realization.
  const double qf = std::norm(q2) * std::norm(dot_t(f_a, gt_a));
  const double v =
      len * (qf * (std::norm(k2) * (std::norm(s1.coeff_a) * s1.sigma2_r +
                                    s1.sigma2_ap) +
                   s1.sigma2_r) +
             s1.sigma2_ap);
  out.snr_proxy = v > 0 ? out.c * out.c / v
                        : std::numeric_limits<double>::infinity();

  if (std::abs(y) < kMagnitudeFloor) {
    out.unresolvable = true;
    return out;
  }
  out.theta_hat = std::arg(y);
  out.error = wrap_angle(out.theta_hat - out.theta_true);
  return out;
}

// --- coherent joint transmission gain ----------------------------------------

// Ratio of coherently combined to perfectly aligned power at the UE when AP-A
// precompensates by theta_hat. Equals 1 iff the compensation is exact.
inline double cjt_gain(const CVec& h_a, const CVec& h_b, const Node& ap_a,
                       const Node& ap_b, const CalibrationCoeffs& cal_a,
                       const CalibrationCoeffs& cal_b, const RfChain& ue,
                       double theta_hat) {
  auto ue_sum = [&](const Node& ap, const CalibrationCoeffs& cal,
                    const CVec& h) {
    cdouble s = 0;
    for (const auto& z : ue_receive_calibrated(ap.chain, cal, h, ue)) s += z;
    return s;
  };
  const cdouble y_a = ue_sum(ap_a, cal_a, h_a);
  const cdouble y_b = ue_sum(ap_b, cal_b, h_b);
  const double amp = std::abs(y_a) + std::abs(y_b);
  if (std::abs(y_a) < kMagnitudeFloor || std::abs(y_b) < kMagnitudeFloor)
    throw std::domain_error("cjt_gain: degenerate UE link");
  return std::norm(y_a * std::polar(1.0, theta_hat) + y_b) / (amp * amp);
}

}  // namespace otasync
