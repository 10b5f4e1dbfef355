#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "otasync/protocol.hpp"
#include "otasync/system_model.hpp"

namespace otasync {

enum class BeamformerMode { kGenie, kPilot };

struct BeamformerSpec {
  BeamformerMode mode = BeamformerMode::kGenie;
  int pilot_symbols = 10;
  double pilot_power_w = -1;  // < 0: use the repeater transmit power
};

struct ScenarioConfig {
  int m_a = 16;
  int m_b = 16;
  double rho_a_w = 0.1;
  double rho_b_w = 0.1;
  double rho_r_w = 1e-3;
  double distance_m = 20.0;    // AP-A <-> repeater
  double distance_b_m = -1;    // AP-B <-> repeater; < 0: same as distance_m
  int pilot_len = 10;          // L
  GainSpec gains;
  BeamformerSpec beamformer;
  NoiseModel noise;
  double sigma2_override_w = -1;  // >= 0: bypass the noise model (tests)
  ProtocolOptions protocol{AgcMode::kAnalytic, CMode::kAnalytic,
                           NoisePlacement::kEverywhere};
  bool cjt_metric = false;
  double ue_distance_m = 50.0;
  std::int64_t trials = 10000;
  std::uint64_t seed = 1;

  double sigma2_w() const {
    return sigma2_override_w >= 0 ? sigma2_override_w : noise.variance_w();
  }
  double distance_b() const {
    return distance_b_m > 0 ? distance_b_m : distance_m;
  }
  double pilot_power() const {
    return beamformer.pilot_power_w > 0 ? beamformer.pilot_power_w : rho_r_w;
  }

  void validate() const {
    auto positive = [](double v, const char* key) {
      if (!(v > 0)) throw std::invalid_argument(std::string(key) + " must be > 0");
    };
    if (m_a < 1 || m_b < 1)
      throw std::invalid_argument("antenna counts must be >= 1");
    positive(rho_a_w, "rho_a_w");
    positive(rho_b_w, "rho_b_w");
    positive(rho_r_w, "rho_r_w");
    positive(distance_m, "distance_m");
    if (distance_b_m > 0) positive(distance_b_m, "distance_b_m");
    if (pilot_len < 1) throw std::invalid_argument("pilot_len must be >= 1");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (beamformer.mode == BeamformerMode::kPilot && beamformer.pilot_symbols < 1)
      throw std::invalid_argument("pilot_symbols must be >= 1");
    if (cjt_metric) positive(ue_distance_m, "ue_distance_m");
    (void)sigma2_w();  // validates the noise model
  }
};

struct TrialResult {
  SyncOutcome outcome;
  double cjt_gain = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Omnidirectional repeater pilot received across M antennas over N_p symbols,
// decomposed into a transmit-side beamformer estimate.
inline CVec estimate_beamformer(const CVec& g_eff, const cdouble& t_r,
                                double pilot_power_w, int n_p, double sigma2,
                                RandomStream& rng) {
  const std::size_t m = g_eff.size();
  CMat y(m, static_cast<std::size_t>(n_p));
  const double amp = std::sqrt(pilot_power_w);
  for (std::size_t i = 0; i < m; ++i)
    for (int n = 0; n < n_p; ++n) {
      cdouble v = amp * t_r * g_eff[i];
      if (sigma2 > 0) v += rng.complex_gaussian(sigma2);
      y(i, static_cast<std::size_t>(n)) = v;
    }
  return acquire_beamformer(y);
}

}  // namespace detail

// One independent trial: fresh RF chains, channels, beamformers, both stages.
// Deterministic for a given (stream, trial_index) regardless of scheduling.
inline TrialResult run_trial(const ScenarioConfig& cfg,
                             std::int64_t trial_index,
                             const RandomStream& cell_stream) {
  RandomStream rng =
      cell_stream.derive(static_cast<std::uint64_t>(trial_index));

  Node ap_a, ap_b, repeater;
  ap_a.cfg = {cfg.m_a, 0, cfg.rho_a_w};
  ap_b.cfg = {cfg.m_b, 0, cfg.rho_b_w};
  repeater.cfg = {1, 0, cfg.rho_r_w};
  ap_a.chain = draw_rf_chain(ap_a.cfg, cfg.gains, rng);
  ap_b.chain = draw_rf_chain(ap_b.cfg, cfg.gains, rng);
  repeater.chain = draw_rf_chain(repeater.cfg, cfg.gains, rng);

  ChannelSet ch;
  ch.g_a = draw_channel(static_cast<std::size_t>(cfg.m_a), cfg.distance_m, rng);
  ch.g_b = draw_channel(static_cast<std::size_t>(cfg.m_b), cfg.distance_b(), rng);

  const double sigma2 = cfg.sigma2_w();
  const CVec gt_a = effective_channel(ap_a.chain, ch.g_a);
  const CVec gt_b = effective_channel(ap_b.chain, ch.g_b);

  CVec f_a, f_b;
  if (cfg.beamformer.mode == BeamformerMode::kGenie) {
    f_a = genie_beamformer(gt_a);
    f_b = genie_beamformer(gt_b);
  } else {
    const cdouble t_r = repeater.chain.t[0];
    f_a = detail::estimate_beamformer(gt_a, t_r, cfg.pilot_power(),
                                      cfg.beamformer.pilot_symbols, sigma2, rng);
    f_b = detail::estimate_beamformer(gt_b, t_r, cfg.pilot_power(),
                                      cfg.beamformer.pilot_symbols, sigma2, rng);
  }

  const PilotSignal x =
      PilotSignal::all_ones(static_cast<std::size_t>(cfg.pilot_len));
  const Stage1Result s1 = repeater_sync_stage1(x, f_a, ap_a, repeater, ch, f_b,
                                               ap_b, sigma2, cfg.protocol, rng);
  const double c_norm = power_normalizer_c(s1, cfg.protocol.c_mode);

  TrialResult res;
  if (!(c_norm > 0)) {
    res.outcome.unresolvable = true;
    res.outcome.theta_true = true_phase_offset(ap_a.chain, 0, ap_b.chain, 0);
    return res;
  }
  res.outcome = repeater_sync_stage2(s1, c_norm, f_b, ap_b, repeater, ch, f_a,
                                     ap_a, x, cfg.protocol, rng);

  if (cfg.cjt_metric && !res.outcome.unresolvable) {
    // Equal-amplitude combining gain at the UE: only the residual phase
    // error degrades it, so it equals cos^2(error / 2).
    ch.h_a = draw_channel(static_cast<std::size_t>(cfg.m_a), cfg.ue_distance_m, rng);
    ch.h_b = draw_channel(static_cast<std::size_t>(cfg.m_b), cfg.ue_distance_m, rng);
    NodeConfig ue_cfg{1, 0, 1.0};
    const RfChain ue = draw_rf_chain(ue_cfg, cfg.gains, rng);
    const auto cal_a = intra_ap_coeffs(ap_a.chain, 0);
    const auto cal_b = intra_ap_coeffs(ap_b.chain, 0);
    auto ue_sum = [&](const Node& ap, const CalibrationCoeffs& cal,
                      const CVec& h) {
      cdouble s = 0;
      for (const auto& z : ue_receive_calibrated(ap.chain, cal, h, ue)) s += z;
      return s;
    };
    const cdouble y_a = ue_sum(ap_a, cal_a, ch.h_a);
    const cdouble y_b = ue_sum(ap_b, cal_b, ch.h_b);
    if (std::abs(y_a) > kMagnitudeFloor && std::abs(y_b) > kMagnitudeFloor) {
      const cdouble u = y_a / std::abs(y_a) *
                            std::polar(1.0, res.outcome.theta_hat) +
                        y_b / std::abs(y_b);
      res.cjt_gain = std::norm(u) / 4.0;
    }
  }
  return res;
}

struct SweepRow {
  double d_m = 0;
  double rho_r_w = 0;
  std::int64_t trials_kept = 0;
  std::int64_t trials_flagged = 0;
  double rmse_rad = 0;
  double ci95_low = 0;
  double ci95_high = 0;
  std::optional<double> mean_cjt_gain;
  bool low_confidence = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

namespace detail {

inline SweepRow aggregate_cell(double d_m, double rho_r_w,
                               const std::vector<TrialResult>& trials) {
  SweepRow row;
  row.d_m = d_m;
  row.rho_r_w = rho_r_w;
  std::vector<double> sq;
  sq.reserve(trials.size());
  double cjt_sum = 0;
  std::int64_t cjt_n = 0;
  bool want_cjt = false;
  for (const auto& t : trials) {
    if (t.outcome.unresolvable) {
      ++row.trials_flagged;
      continue;
    }
    ++row.trials_kept;
    const double e = t.outcome.error;
    sq.push_back(e * e);
    if (std::isfinite(t.cjt_gain)) {
      want_cjt = true;
      cjt_sum += t.cjt_gain;
      ++cjt_n;
    }
  }
  if (row.trials_kept > 0) {
    double m2 = 0;
    for (double v : sq) m2 += v;
    m2 /= static_cast<double>(sq.size());
    double var = 0;
    for (double v : sq) var += (v - m2) * (v - m2);
    var = sq.size() > 1 ? var / static_cast<double>(sq.size() - 1) : 0.0;
    const double se = std::sqrt(var / static_cast<double>(sq.size()));
    row.rmse_rad = std::sqrt(m2);
    row.ci95_low = std::sqrt(std::max(m2 - 1.96 * se, 0.0));
    row.ci95_high = std::sqrt(m2 + 1.96 * se);
  }
  if (want_cjt && cjt_n > 0)
    row.mean_cjt_gain = cjt_sum / static_cast<double>(cjt_n);
  row.low_confidence =
      row.trials_flagged * 100 > static_cast<std::int64_t>(trials.size());
  return row;
}

}  // namespace detail

// Cartesian sweep over distances x repeater powers. Each cell draws from a
// substream keyed by (seed, d, rho_R), each trial by its index, so results
// are independent of worker count, scheduling, and grid ordering.
inline SweepResult run_sweep(const ScenarioConfig& base,
                             const std::vector<double>& distances_m,
                             const std::vector<double>& powers_w,
                             unsigned n_threads = 0) {
  base.validate();
  if (distances_m.empty() || powers_w.empty())
    throw std::invalid_argument("run_sweep: empty grid");
  if (n_threads == 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());

  const RandomStream root(base.seed);
  SweepResult result;
  for (double d : distances_m) {
    for (double p : powers_w) {
      ScenarioConfig cfg = base;
      cfg.distance_m = d;
      cfg.rho_r_w = p;
      cfg.validate();
      const RandomStream cell = root.derive(d).derive(p);

      std::vector<TrialResult> trials(static_cast<std::size_t>(cfg.trials));
      const unsigned workers = static_cast<unsigned>(
          std::min<std::int64_t>(n_threads, cfg.trials));
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::int64_t i = w; i < cfg.trials;
               i += static_cast<std::int64_t>(workers))
            trials[static_cast<std::size_t>(i)] = run_trial(cfg, i, cell);
        });
      for (auto& th : pool) th.join();
      result.rows.push_back(detail::aggregate_cell(d, p, trials));
    }
  }
  return result;
}

}  // namespace otasync
