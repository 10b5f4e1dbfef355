#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "otasync/montecarlo.hpp"

namespace otasync {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunSpec {
  ScenarioConfig base;
  std::vector<double> distances_m{20.0};
  std::vector<double> rho_r_mw{1.0};
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': malformed number '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config key '" + key + "': malformed number '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': malformed integer '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config key '" + key + "': malformed integer '" + v + "'");
  return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty())
    throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected boolean, got '" + v + "'");
}

}  // namespace detail

// Applies one dotted key=value setting; throws naming the key on any problem.
inline void apply_config_key(RunSpec& spec, const std::string& key,
                             const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_list;
  ScenarioConfig& c = spec.base;
  auto bad_enum = [&](const char* expected) {
    throw std::invalid_argument("config key '" + key + "': expected " +
                                expected + ", got '" + value + "'");
  };

  if (key == "m_a") c.m_a = static_cast<int>(parse_int(key, value));
  else if (key == "m_b") c.m_b = static_cast<int>(parse_int(key, value));
  else if (key == "rho_a_mw") c.rho_a_w = parse_double(key, value) * 1e-3;
  else if (key == "rho_b_mw") c.rho_b_w = parse_double(key, value) * 1e-3;
  else if (key == "rho_r_mw") spec.rho_r_mw = parse_list(key, value);
  else if (key == "distance_m") spec.distances_m = parse_list(key, value);
  else if (key == "distance_b_m") c.distance_b_m = parse_double(key, value);
  else if (key == "pilot_len") c.pilot_len = static_cast<int>(parse_int(key, value));
  else if (key == "trials") c.trials = parse_int(key, value);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "ue_distance_m") c.ue_distance_m = parse_double(key, value);
  else if (key == "cjt") c.cjt_metric = parse_bool(key, value);
  else if (key == "gains.model") {
    if (value == "unit") c.gains.model = GainModel::kUnitMagnitude;
    else if (value == "band") c.gains.model = GainModel::kMagnitudeBand;
    else bad_enum("unit|band");
  } else if (key == "gains.lo") c.gains.lo = parse_double(key, value);
  else if (key == "gains.hi") c.gains.hi = parse_double(key, value);
  else if (key == "beamformer.mode") {
    if (value == "genie") c.beamformer.mode = BeamformerMode::kGenie;
    else if (value == "pilot") c.beamformer.mode = BeamformerMode::kPilot;
    else bad_enum("genie|pilot");
  } else if (key == "beamformer.pilot_symbols")
    c.beamformer.pilot_symbols = static_cast<int>(parse_int(key, value));
  else if (key == "beamformer.pilot_power_mw")
    c.beamformer.pilot_power_w = parse_double(key, value) * 1e-3;
  else if (key == "noise.temperature_k") c.noise.temperature_k = parse_double(key, value);
  else if (key == "noise.bandwidth_hz") c.noise.bandwidth_hz = parse_double(key, value);
  else if (key == "noise.noise_figure_db")
    c.noise.noise_figure_db = parse_double(key, value);
  else if (key == "protocol.agc") {
    if (value == "literal") c.protocol.agc = AgcMode::kLiteral;
    else if (value == "analytic") c.protocol.agc = AgcMode::kAnalytic;
    else bad_enum("literal|analytic");
  } else if (key == "protocol.c_mode") {
    if (value == "analytic") c.protocol.c_mode = CMode::kAnalytic;
    else if (value == "empirical") c.protocol.c_mode = CMode::kEmpirical;
    else bad_enum("analytic|empirical");
  } else if (key == "protocol.noise_placement") {
    if (value == "everywhere") c.protocol.placement = NoisePlacement::kEverywhere;
    else if (value == "repeater_only")
      c.protocol.placement = NoisePlacement::kRepeaterOnly;
    else bad_enum("everywhere|repeater_only");
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

// Flat key = value file with '#' comments.
inline void load_config_file(RunSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    apply_config_key(spec, detail::trim(line.substr(0, eq)),
                     detail::trim(line.substr(eq + 1)));
  }
}

namespace detail {

inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

}  // namespace detail

// CSV schema: d_m, rho_r_mw, trials_kept, trials_flagged, rmse_rad,
// ci95_low, ci95_high, mean_cjt_gain (empty when the metric is off).
inline std::string to_csv(const SweepResult& result) {
  std::string out =
      "d_m,rho_r_mw,trials_kept,trials_flagged,rmse_rad,ci95_low,ci95_high,"
      "mean_cjt_gain\n";
  for (const auto& r : result.rows) {
    out += detail::full_precision(r.d_m) + ',';
    out += detail::full_precision(r.rho_r_w * 1e3) + ',';
    out += std::to_string(r.trials_kept) + ',';
    out += std::to_string(r.trials_flagged) + ',';
    out += detail::full_precision(r.rmse_rad) + ',';
    out += detail::full_precision(r.ci95_low) + ',';
    out += detail::full_precision(r.ci95_high) + ',';
    if (r.mean_cjt_gain) out += detail::full_precision(*r.mean_cjt_gain);
    out += '\n';
  }
  return out;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["m_a"] = c.m_a;
  j["m_b"] = c.m_b;
  j["rho_a_mw"] = c.rho_a_w * 1e3;
  j["rho_b_mw"] = c.rho_b_w * 1e3;
  j["distance_b_m"] = c.distance_b();
  j["pilot_len"] = c.pilot_len;
  j["gains"] = {{"model", c.gains.model == GainModel::kUnitMagnitude ? "unit" : "band"},
                {"lo", c.gains.lo},
                {"hi", c.gains.hi}};
  j["beamformer"] = {
      {"mode", c.beamformer.mode == BeamformerMode::kGenie ? "genie" : "pilot"},
      {"pilot_symbols", c.beamformer.pilot_symbols},
      {"pilot_power_mw", c.pilot_power() * 1e3}};
  j["noise"] = {{"temperature_k", c.noise.temperature_k},
                {"bandwidth_hz", c.noise.bandwidth_hz},
                {"noise_figure_db", c.noise.noise_figure_db},
                {"variance_w", c.sigma2_w()}};
  j["protocol"] = {
      {"agc", c.protocol.agc == AgcMode::kLiteral ? "literal" : "analytic"},
      {"c_mode",
       c.protocol.c_mode == CMode::kAnalytic ? "analytic" : "empirical"},
      {"noise_placement", c.protocol.placement == NoisePlacement::kEverywhere
                              ? "everywhere"
                              : "repeater_only"}};
  j["cjt"] = c.cjt_metric;
  j["ue_distance_m"] = c.ue_distance_m;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  return j;
}

struct RunManifest {
  RunSpec spec;
  std::string out_path;
  std::string plot_path;
  std::string format = "csv";
  std::string started_utc;
  std::string finished_utc;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["config"] = config_to_json(spec.base);
    j["sweep"] = {{"distance_m", spec.distances_m},
                  {"rho_r_mw", spec.rho_r_mw}};
    j["output"] = {{"path", out_path}, {"format", format}, {"plot", plot_path}};
    j["started_utc"] = started_utc;
    j["finished_utc"] = finished_utc;
    return j;
  }
};

inline nlohmann::json result_to_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    nlohmann::json row;
    row["d_m"] = r.d_m;
    row["rho_r_mw"] = r.rho_r_w * 1e3;
    row["trials_kept"] = r.trials_kept;
    row["trials_flagged"] = r.trials_flagged;
    row["rmse_rad"] = r.rmse_rad;
    row["ci95_low"] = r.ci95_low;
    row["ci95_high"] = r.ci95_high;
    if (r.mean_cjt_gain) row["mean_cjt_gain"] = *r.mean_cjt_gain;
    row["low_confidence"] = r.low_confidence;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline SweepResult result_from_json(const nlohmann::json& rows) {
  SweepResult result;
  for (const auto& row : rows) {
    SweepRow r;
    r.d_m = row.at("d_m").get<double>();
    r.rho_r_w = row.at("rho_r_mw").get<double>() * 1e-3;
    r.trials_kept = row.at("trials_kept").get<std::int64_t>();
    r.trials_flagged = row.at("trials_flagged").get<std::int64_t>();
    r.rmse_rad = row.at("rmse_rad").get<double>();
    r.ci95_low = row.at("ci95_low").get<double>();
    r.ci95_high = row.at("ci95_high").get<double>();
    if (row.contains("mean_cjt_gain"))
      r.mean_cjt_gain = row.at("mean_cjt_gain").get<double>();
    r.low_confidence = row.value("low_confidence", false);
    result.rows.push_back(std::move(r));
  }
  return result;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void emit_csv(const SweepResult& result, const std::string& path) {
  write_file(path, to_csv(result));
}

inline void emit_json(const SweepResult& result, const RunManifest& manifest,
                      const std::string& path) {
  nlohmann::json j;
  j["manifest"] = manifest.to_json();
  j["rows"] = result_to_json(result);
  write_file(path, j.dump(2) + "\n");
}

// RMSE vs distance on a log y-axis, one polyline per repeater power.
inline void emit_svg(const SweepResult& result, const std::string& path) {
  if (result.rows.empty())
    throw std::invalid_argument("emit_svg: empty result");

  std::vector<double> powers;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : result.rows) {
    if (std::find(powers.begin(), powers.end(), r.rho_r_w) == powers.end())
      powers.push_back(r.rho_r_w);
    xmin = std::min(xmin, r.d_m);
    xmax = std::max(xmax, r.d_m);
    if (r.rmse_rad > 0) {
      ymin = std::min(ymin, r.rmse_rad);
      ymax = std::max(ymax, r.rmse_rad);
    }
  }
  std::sort(powers.begin(), powers.end());
  if (ymin > ymax) { ymin = 1e-6; ymax = 1.0; }  // all-zero RMSE fallback
  if (xmax == xmin) { xmin -= 1; xmax += 1; }
  const double lo = std::floor(std::log10(ymin));
  const double hi = std::ceil(std::log10(ymax) + (ymin == ymax ? 1 : 0));

  const double w = 640, h = 480, ml = 70, mr = 150, mt = 20, mb = 50;
  auto px = [&](double d) {
    return ml + (d - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double v) {
    return h - mb - (std::log10(v) - lo) / (hi - lo) * (h - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // log-decade ticks and gridlines
  for (double e = lo; e <= hi + 0.5; e += 1) {
    const double y = py(std::pow(10.0, e));
    svg << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << w - mr
        << "\" y2=\"" << y << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"11\">1e" << static_cast<int>(e)
        << "</text>\n";
  }
  // x ticks at data abscissae
  std::vector<double> xs;
  for (const auto& r : result.rows)
    if (std::find(xs.begin(), xs.end(), r.d_m) == xs.end()) xs.push_back(r.d_m);
  std::sort(xs.begin(), xs.end());
  for (double d : xs)
    svg << "<text x=\"" << px(d) << "\" y=\"" << h - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << d << "</text>\n";
  svg << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">distance (m)</text>\n"
      << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 16 " << (mt + h - mb) / 2
      << ")\" text-anchor=\"middle\">RMSE (rad)</text>\n"
      << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
      << "\" height=\"" << h - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (std::size_t k = 0; k < powers.size(); ++k) {
    const char* color = colors[k % 6];
    std::vector<const SweepRow*> pts;
    for (const auto& r : result.rows)
      if (r.rho_r_w == powers[k] && r.rmse_rad > 0) pts.push_back(&r);
    std::sort(pts.begin(), pts.end(),
              [](const SweepRow* a, const SweepRow* b) { return a->d_m < b->d_m; });
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto* r : pts) svg << px(r->d_m) << ',' << py(r->rmse_rad) << ' ';
    svg << "\"/>\n";
    for (const auto* r : pts)
      svg << "<circle cx=\"" << px(r->d_m) << "\" cy=\"" << py(r->rmse_rad)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(k);
    svg << "<line x1=\"" << w - mr + 10 << "\" y1=\"" << ly << "\" x2=\""
        << w - mr + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n"
        << "<text x=\"" << w - mr + 40 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << powers[k] * 1e3 << " mW</text>\n";
  }
  svg << "</svg>\n";
  write_file(path, svg.str());
}

}  // namespace otasync
