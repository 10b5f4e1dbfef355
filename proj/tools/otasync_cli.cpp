// Command-line front end: sweep the repeater-aided phase-sync simulator over
// distance x repeater-power grids and emit CSV/JSON tables, a run manifest,
// and an optional SVG plot.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otasync/io.hpp"
#include "otasync/montecarlo.hpp"

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeater-aided over-the-air phase synchronization simulator"};

  std::string config_path, out_path = "results.csv", plot_path, format = "csv";
  std::string beamformer, c_mode, agc, placement;
  std::vector<double> distances, powers_mw;
  long long trials = -1;
  long long seed = -1;
  bool cjt = false;

  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--distance-m", distances, "AP-repeater distances in meters");
  app.add_option("--rho-r-mw", powers_mw, "repeater transmit powers in mW");
  app.add_option("--trials", trials, "Monte Carlo trials per cell");
  app.add_option("--seed", seed, "RNG seed (fallback: DMIMO_SEED env)");
  app.add_option("--beamformer", beamformer, "genie|pilot")
      ->check(CLI::IsMember({"genie", "pilot"}));
  app.add_option("--c-mode", c_mode, "analytic|empirical power normalizer")
      ->check(CLI::IsMember({"analytic", "empirical"}));
  app.add_option("--agc", agc, "literal|analytic repeater forward gain")
      ->check(CLI::IsMember({"literal", "analytic"}));
  app.add_option("--noise-placement", placement, "everywhere|repeater_only")
      ->check(CLI::IsMember({"everywhere", "repeater_only"}));
  app.add_option("--out", out_path, "output table path");
  app.add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--plot", plot_path, "write an SVG plot to this path");
  app.add_flag("--cjt", cjt, "also report the mean coherent-combining gain");

  CLI11_PARSE(app, argc, argv);

  try {
    otasync::RunSpec spec;
    if (!config_path.empty()) otasync::load_config_file(spec, config_path);

    // Flags override file values.
    if (!distances.empty()) spec.distances_m = distances;
    if (!powers_mw.empty()) spec.rho_r_mw = powers_mw;
    if (trials >= 0) spec.base.trials = trials;
    if (seed >= 0) {
      spec.base.seed = static_cast<std::uint64_t>(seed);
    } else if (const char* env = std::getenv("DMIMO_SEED")) {
      spec.base.seed = static_cast<std::uint64_t>(
          otasync::detail::parse_int("DMIMO_SEED", env));
    }
    if (!beamformer.empty())
      otasync::apply_config_key(spec, "beamformer.mode", beamformer);
    if (!c_mode.empty()) otasync::apply_config_key(spec, "protocol.c_mode", c_mode);
    if (!agc.empty()) otasync::apply_config_key(spec, "protocol.agc", agc);
    if (!placement.empty())
      otasync::apply_config_key(spec, "protocol.noise_placement", placement);
    if (cjt) spec.base.cjt_metric = true;

    for (double d : spec.distances_m)
      if (!(d > 0)) throw std::invalid_argument("--distance-m: values must be > 0");
    for (double p : spec.rho_r_mw)
      if (!(p > 0)) throw std::invalid_argument("--rho-r-mw: values must be > 0");
    spec.base.validate();

    otasync::RunManifest manifest;
    manifest.spec = spec;
    manifest.out_path = out_path;
    manifest.plot_path = plot_path;
    manifest.format = format;
    manifest.started_utc = utc_now();

    std::vector<double> powers_w;
    for (double p : spec.rho_r_mw) powers_w.push_back(p * 1e-3);
    const auto result =
        otasync::run_sweep(spec.base, spec.distances_m, powers_w);

    manifest.finished_utc = utc_now();
    if (format == "json") {
      otasync::emit_json(result, manifest, out_path);
    } else {
      otasync::emit_csv(result, out_path);
      otasync::write_file(out_path + ".manifest.json",
                          manifest.to_json().dump(2) + "\n");
    }
    if (!plot_path.empty()) otasync::emit_svg(result, plot_path);

    const std::size_t expected = spec.distances_m.size() * spec.rho_r_mw.size();
    std::size_t low_conf = 0;
    for (const auto& r : result.rows)
      if (r.low_confidence) ++low_conf;
    std::cerr << "wrote " << result.rows.size() << "/" << expected
              << " cells to " << out_path;
    if (low_conf) std::cerr << " (" << low_conf << " low-confidence)";
    std::cerr << "\n";
    if (result.rows.size() != expected) {
      std::cerr << "error: " << expected - result.rows.size()
                << " cells incomplete\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
