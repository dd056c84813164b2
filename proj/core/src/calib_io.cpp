#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json_util.hpp"
#include "pnr/calib.hpp"
#include "pnr/errors.hpp"

namespace pnr {

using detail::json;

namespace {

constexpr const char* kFileFormat = "pnr-calibration";

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json model_json(const CalibrationModel& m) {
  json comps = json::array();
  for (std::size_t i = 0; i < m.components.size(); ++i) {
    const auto& c = m.components[i];
    comps.push_back({{"photon_number", i + 1},
                     {"center_ps", c.center},
                     {"sigma_ps", c.sigma},
                     {"gamma_ps", c.gamma},
                     {"weight", c.weight}});
  }
  return {{"mode", to_string(m.mode)},
          {"detector", to_string(m.detector)},
          {"angle_rad", m.angle},
          {"angle_deg", m.angle * 180.0 / std::numbers::pi},
          {"orientation", m.orientation},
          {"components", comps},
          {"boundaries_ps", m.boundaries},
          {"crosstalk", m.crosstalk},
          {"fit",
           {{"log_likelihood", finite_or_null(m.log_likelihood)},
            {"reduced_chi_square", finite_or_null(m.reduced_chi_square)},
            {"fallback_pairs", m.fallback_pairs}}}};
}

CalibrationModel model_from(const json& j) {
  CalibrationModel m;
  try {
    m.mode = parse_calibration_mode(j.at("mode").get<std::string>());
    m.detector = parse_detector(j.at("detector").get<std::string>());
    m.angle = j.at("angle_rad").get<double>();
    m.orientation = j.value("orientation", 1);
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("center_ps").get<double>(), c.at("sigma_ps").get<double>(),
                              c.at("gamma_ps").get<double>(), c.at("weight").get<double>()});
    }
    m.boundaries = j.at("boundaries_ps").get<std::vector<double>>();
    m.crosstalk = j.at("crosstalk").get<Matrix>();
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      if (f.contains("log_likelihood") && f["log_likelihood"].is_number()) m.log_likelihood = f["log_likelihood"];
      if (f.contains("reduced_chi_square") && f["reduced_chi_square"].is_number()) {
        m.reduced_chi_square = f["reduced_chi_square"];
      }
      if (f.contains("fallback_pairs")) m.fallback_pairs = f["fallback_pairs"].get<std::vector<int>>();
    }
  } catch (const json::exception& e) {
    throw CalibrationError(std::string("malformed calibration model: ") + e.what());
  } catch (const ConfigError& e) {
    throw CalibrationError(std::string("malformed calibration model: ") + e.what());
  }
  m.validate();
  return m;
}

json parse_calibration_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CalibrationError(std::string("calibration is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string to_json(const CalibrationModel& model) { return model_json(model).dump(2); }

CalibrationModel calibration_model_from_json(const std::string& text) {
  return model_from(parse_calibration_text(text));
}

std::string calibration_file_json(const CalibrationResult& r) {
  json trials = json::array();
  for (const auto& t : r.search.trials) {
    json tj = {{"angle_deg", t.angle * 180.0 / std::numbers::pi}, {"objective", finite_or_null(t.objective)}};
    if (!t.message.empty()) tj["message"] = t.message;
    trials.push_back(tj);
  }
  json root = {{"format", kFileFormat},
               {"version", 1},
               {"detector", to_string(r.optimal.detector)},
               {"peak_count", r.peak_count},
               {"reference_angle_deg", r.search.reference_angle * 180.0 / std::numbers::pi},
               {"total_crosstalk",
                {{"optimal", off_diagonal_mass(r.optimal.crosstalk)},
                 {"rising_only", off_diagonal_mass(r.rising_only.crosstalk)}}},
               {"models", {{"optimal", model_json(r.optimal)}, {"rising_only", model_json(r.rising_only)}}},
               {"angle_trials", trials}};
  return root.dump(2);
}

CalibrationModel load_calibration(const std::string& path, CalibrationMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const json j = parse_calibration_text(buf.str());
  if (!j.is_object()) throw CalibrationError("calibration '" + path + "' is not a JSON object");
  if (j.contains("models")) {
    const char* key = to_string(mode);
    if (!j["models"].contains(key)) {
      throw CalibrationError("calibration '" + path + "' has no '" + key + "' model");
    }
    return model_from(j["models"][key]);
  }
  auto m = model_from(j);
  if (m.mode != mode) {
    throw CalibrationError("calibration '" + path + "' holds a " + to_string(m.mode) + " model, not " +
                           to_string(mode));
  }
  return m;
}

void write_projection_csv(const std::string& path, std::span<const EdgeEvent> detected,
                          const CalibrationModel& model, double bin_width_ps) {
  std::vector<EdgeEvent> events;
  for (const auto& e : detected) {
    if (e.has_detection) events.push_back(e);
  }
  const auto coords = project(events, model.angle);
  const auto hist = build_histogram_1d(coords, bin_width_ps);
  const double scale = hist.total() * bin_width_ps;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.precision(10);
  out << "coordinate_ps,count,fit";
  for (int n = 1; n <= model.component_count(); ++n) out << ",n" << n;
  out << '\n';
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    const double x = hist.axis.center(b);
    std::vector<double> parts;
    double sum = 0.0;
    for (const auto& c : model.components) {
      parts.push_back(scale * voigt_pdf(x, c));
      sum += parts.back();
    }
    out << x << ',' << hist.counts[b] << ',' << sum;
    for (double p : parts) out << ',' << p;
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.precision(12);
  out << "n";
  for (std::size_t j = 0; j < m.size(); ++j) out << ',' << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << i + 1;
    for (double v : m[i]) out << ',' << v;
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace pnr
