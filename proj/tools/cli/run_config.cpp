#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "pnr/errors.hpp"

namespace pnr::cli {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void parse_fit(const json& j, MixtureFitOptions& f) {
  reject_unknown(j, {"bin_width_ps", "max_evaluations", "f_tolerance", "shared_shape"}, "calibrate.fit");
  read(j, "bin_width_ps", f.bin_width_ps, "calibrate.fit");
  read(j, "max_evaluations", f.max_evaluations, "calibrate.fit");
  read(j, "f_tolerance", f.f_tolerance, "calibrate.fit");
  read(j, "shared_shape", f.shared_shape, "calibrate.fit");
  require(f.bin_width_ps > 0, "calibrate.fit.bin_width_ps must be > 0");
  require(f.max_evaluations > 0, "calibrate.fit.max_evaluations must be > 0");
  require(f.f_tolerance > 0, "calibrate.fit.f_tolerance must be > 0");
}

void parse_calibrate(const json& j, CalibrateSettings& s) {
  const std::string w = "calibrate";
  reject_unknown(j,
                 {"detector", "window_ps", "projection_bin_ps", "rise_bin_ps", "fall_bin_ps", "components",
                  "smoothing_sigma_bins", "min_prominence", "peak_scan_step_deg", "coarse_step_deg",
                  "angle_tolerance_deg", "fit"},
                 w);
  std::string det = to_string(s.detector);
  read(j, "detector", det, w);
  try {
    s.detector = parse_detector(det);
  } catch (const DomainError& e) {
    throw ConfigError(w + ".detector: " + e.what());
  }
  auto& o = s.options;
  read(j, "window_ps", s.window_ps, w);
  read(j, "projection_bin_ps", o.projection_bin_ps, w);
  read(j, "rise_bin_ps", o.rise_bin_ps, w);
  read(j, "fall_bin_ps", o.fall_bin_ps, w);
  read(j, "components", o.components, w);
  read(j, "smoothing_sigma_bins", o.smoothing_sigma_bins, w);
  read(j, "min_prominence", o.min_prominence, w);
  read(j, "peak_scan_step_deg", o.peak_scan_step_deg, w);
  read(j, "coarse_step_deg", o.coarse_step_deg, w);
  read(j, "angle_tolerance_deg", o.angle_tolerance_deg, w);
  if (j.contains("fit")) parse_fit(j["fit"], o.fit);
  require(s.window_ps > 0, "calibrate.window_ps must be > 0");
  require(o.projection_bin_ps > 0 && o.rise_bin_ps > 0 && o.fall_bin_ps > 0, "calibrate bin widths must be > 0");
  require(o.components >= 0, "calibrate.components must be >= 0");
  require(o.smoothing_sigma_bins > 0, "calibrate.smoothing_sigma_bins must be > 0");
  require(o.min_prominence > 0 && o.min_prominence < 1, "calibrate.min_prominence must be in (0, 1)");
  require(o.peak_scan_step_deg > 0 && o.coarse_step_deg > 0 && o.angle_tolerance_deg > 0,
          "calibrate angle steps must be > 0");
}

void parse_decode(const json& j, DecodeSettings& s) {
  reject_unknown(j, {"window_ps", "mode", "compare_up_to"}, "decode");
  std::string mode = to_string(s.mode);
  read(j, "window_ps", s.window_ps, "decode");
  read(j, "mode", mode, "decode");
  read(j, "compare_up_to", s.compare_up_to, "decode");
  s.mode = parse_calibration_mode(mode);
  require(s.window_ps > 0, "decode.window_ps must be > 0");
  require(s.compare_up_to >= 0, "decode.compare_up_to must be >= 0");
}

void parse_stats(const json& j, StatsSettings& s) {
  reject_unknown(j, {"n_max", "top_category"}, "stats");
  read(j, "n_max", s.n_max, "stats");
  read(j, "top_category", s.top_category, "stats");
  require(s.n_max >= 1, "stats.n_max must be >= 1");
  require(s.top_category >= 1 && s.top_category <= s.n_max, "stats.top_category must be in [1, n_max]");
}

void parse_jpnd(const json& j, JpndSettings& s) {
  reject_unknown(j, {"n_max", "window_ps"}, "jpnd");
  read(j, "n_max", s.n_max, "jpnd");
  read(j, "window_ps", s.window_ps, "jpnd");
  require(s.n_max >= 2, "jpnd.n_max must be >= 2");
  require(s.window_ps > 0, "jpnd.window_ps must be > 0");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(root, {"simulate", "calibrate", "decode", "stats", "jpnd"}, "config");
  RunConfig c;
  if (root.contains("simulate")) c.simulate = parse_simulation_config(root["simulate"].dump());
  if (root.contains("calibrate")) parse_calibrate(root["calibrate"], c.calibrate);
  if (root.contains("decode")) parse_decode(root["decode"], c.decode);
  if (root.contains("stats")) parse_stats(root["stats"], c.stats);
  if (root.contains("jpnd")) parse_jpnd(root["jpnd"], c.jpnd);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

}  // namespace pnr::cli
