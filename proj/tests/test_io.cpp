#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "otasync/io.hpp"

using namespace otasync;

namespace {

SweepResult sample_result(bool with_cjt = false) {
  SweepResult r;
  SweepRow a;
  a.d_m = 20;
  a.rho_r_w = 1e-3;
  a.trials_kept = 99;
  a.trials_flagged = 1;
  a.rmse_rad = 1.7e-3;
  a.ci95_low = 1.6e-3;
  a.ci95_high = 1.8e-3;
  if (with_cjt) a.mean_cjt_gain = 0.995;
  SweepRow b = a;
  b.d_m = 50;
  b.rho_r_w = 5e-3;
  b.rmse_rad = 1.1e-2;
  b.ci95_low = 1.0e-2;
  b.ci95_high = 1.2e-2;
  r.rows = {a, b};
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(const char* name) : path(std::string("/tmp/otasync_test_") + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("config keys apply with validation and precedence") {
  RunSpec spec;
  apply_config_key(spec, "m_a", "8");
  apply_config_key(spec, "rho_r_mw", "1, 5, 10");
  apply_config_key(spec, "distance_m", "10,20");
  apply_config_key(spec, "beamformer.mode", "pilot");
  apply_config_key(spec, "protocol.agc", "literal");
  apply_config_key(spec, "noise.noise_figure_db", "7");
  apply_config_key(spec, "cjt", "true");
  CHECK(spec.base.m_a == 8);
  CHECK(spec.rho_r_mw == std::vector<double>{1, 5, 10});
  CHECK(spec.distances_m == std::vector<double>{10, 20});
  CHECK(spec.base.beamformer.mode == BeamformerMode::kPilot);
  CHECK(spec.base.protocol.agc == AgcMode::kLiteral);
  CHECK(spec.base.noise.noise_figure_db == 7.0);
  CHECK(spec.base.cjt_metric);

  // later application overrides (flag-over-file precedence)
  apply_config_key(spec, "rho_r_mw", "5");
  CHECK(spec.rho_r_mw == std::vector<double>{5});

  CHECK_THROWS_WITH(apply_config_key(spec, "bogus_key", "1"),
                    Catch::Matchers::ContainsSubstring("bogus_key"));
  CHECK_THROWS_WITH(apply_config_key(spec, "m_a", "eight"),
                    Catch::Matchers::ContainsSubstring("m_a"));
  CHECK_THROWS_WITH(apply_config_key(spec, "beamformer.mode", "oracle"),
                    Catch::Matchers::ContainsSubstring("beamformer.mode"));
}

TEST_CASE("config file parsing") {
  TempFile f("cfg");
  {
    std::ofstream out(f.path);
    out << "# comment line\n"
        << "m_a = 4   # trailing comment\n"
        << "trials = 123\n"
        << "\n"
        << "protocol.noise_placement = repeater_only\n";
  }
  RunSpec spec;
  load_config_file(spec, f.path);
  CHECK(spec.base.m_a == 4);
  CHECK(spec.base.trials == 123);
  CHECK(spec.base.protocol.placement == NoisePlacement::kRepeaterOnly);

  {
    std::ofstream out(f.path);
    out << "just words\n";
  }
  RunSpec bad;
  CHECK_THROWS_AS(load_config_file(bad, f.path), std::invalid_argument);
  CHECK_THROWS_AS(load_config_file(bad, "/nonexistent/path.cfg"), std::runtime_error);
}

TEST_CASE("CSV emission") {
  const auto csv = to_csv(sample_result());
  std::istringstream ss(csv);
  std::string line;
  REQUIRE(std::getline(ss, line));
  CHECK(line ==
        "d_m,rho_r_mw,trials_kept,trials_flagged,rmse_rad,ci95_low,ci95_high,"
        "mean_cjt_gain");
  int rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    CHECK(line.back() == ',');  // cjt column empty when the metric is off
  }
  CHECK(rows == 2);

  const auto with = to_csv(sample_result(true));
  CHECK(with.find("9.9499") != std::string::npos);  // 0.995 at full precision
  // full-precision scientific notation
  CHECK(with.find("e-03") != std::string::npos);
}

TEST_CASE("JSON round trip preserves the table") {
  const auto result = sample_result(true);
  RunManifest manifest;
  manifest.out_path = "x.json";
  manifest.format = "json";
  manifest.started_utc = "2026-01-01T00:00:00Z";
  manifest.finished_utc = "2026-01-01T00:00:01Z";

  TempFile f("roundtrip.json");
  emit_json(result, manifest, f.path);
  const auto j = nlohmann::json::parse(slurp(f.path));
  const auto back = result_from_json(j.at("rows"));
  REQUIRE(back.rows.size() == result.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].d_m == result.rows[i].d_m);
    CHECK(back.rows[i].rho_r_w == result.rows[i].rho_r_w);
    CHECK(back.rows[i].trials_kept == result.rows[i].trials_kept);
    CHECK(back.rows[i].trials_flagged == result.rows[i].trials_flagged);
    CHECK(back.rows[i].rmse_rad == result.rows[i].rmse_rad);
    CHECK(back.rows[i].ci95_low == result.rows[i].ci95_low);
    CHECK(back.rows[i].ci95_high == result.rows[i].ci95_high);
    CHECK(back.rows[i].mean_cjt_gain == result.rows[i].mean_cjt_gain);
  }

  // manifest is fully resolved
  const auto& m = j.at("manifest");
  CHECK(m.at("config").contains("m_a"));
  CHECK(m.at("config").contains("seed"));
  CHECK(m.at("config").at("noise").contains("variance_w"));
  CHECK(m.at("sweep").contains("distance_m"));
  CHECK(m.at("tool_version").get<std::string>() == kToolVersion);
}

TEST_CASE("SVG plot structure") {
  SweepResult r;
  for (double p : {1e-3, 5e-3, 10e-3, 50e-3})
    for (double d : {20.0, 50.0, 80.0}) {
      SweepRow row;
      row.d_m = d;
      row.rho_r_w = p;
      row.trials_kept = 10;
      row.rmse_rad = 1e-3 * d * (1e-3 / p + 1);
      row.ci95_low = row.rmse_rad * 0.9;
      row.ci95_high = row.rmse_rad * 1.1;
      r.rows.push_back(row);
    }
  TempFile f("plot.svg");
  emit_svg(r, f.path);
  const auto svg = slurp(f.path);

  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 9;
  }
  CHECK(polylines == 4);
  CHECK(svg.find("mW") != std::string::npos);
  CHECK(svg.find("1e-") != std::string::npos);  // log ticks

  SweepResult single;
  single.rows = {r.rows[0]};
  TempFile f2("plot1.svg");
  emit_svg(single, f2.path);
  CHECK(slurp(f2.path).find("<circle") != std::string::npos);

  CHECK_THROWS_AS(emit_svg(SweepResult{}, "/tmp/otasync_empty.svg"),
                  std::invalid_argument);
}

TEST_CASE("write failures surface the path") {
  CHECK_THROWS_WITH(write_file("/nonexistent_dir/file.csv", "x"),
                    Catch::Matchers::ContainsSubstring("/nonexistent_dir/file.csv"));
}
