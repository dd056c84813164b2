#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "pnr/calib.hpp"
#include "pnr/errors.hpp"
#include "pnr/numeric.hpp"
#include "pnr/parallel.hpp"

namespace pnr {

namespace {

constexpr double kPi = std::numbers::pi;

double deg(double rad) { return rad * 180.0 / kPi; }
double rad(double deg) { return deg * kPi / 180.0; }

double normalize_angle(double a) {
  a = std::fmod(a, kPi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a = 0.0;
  return a;
}

std::string angle_context(double angle) {
  std::ostringstream s;
  s.precision(6);
  s << "angle " << deg(angle) << " deg";
  return s.str();
}

// Builds a model from components fitted in coordinate order. With
// orientation -1 the highest coordinate is photon number 1.
CalibrationModel assemble(std::vector<VoigtComponent> by_coordinate, int orientation, double angle,
                          Detector detector, const MixtureFitReport& report) {
  CalibrationModel m;
  m.angle = angle;
  m.detector = detector;
  m.orientation = orientation;
  m.log_likelihood = report.log_likelihood;
  m.reduced_chi_square = report.reduced_chi_square;
  m.boundaries = boundaries_with_fallback(by_coordinate, &m.fallback_pairs);
  m.crosstalk = crosstalk_matrix(by_coordinate, m.boundaries);
  if (orientation < 0) {
    std::reverse(by_coordinate.begin(), by_coordinate.end());
    std::reverse(m.crosstalk.begin(), m.crosstalk.end());
    for (auto& row : m.crosstalk) std::reverse(row.begin(), row.end());
    const int last = static_cast<int>(by_coordinate.size()) - 2;
    for (auto& p : m.fallback_pairs) p = last - p;
    std::sort(m.fallback_pairs.begin(), m.fallback_pairs.end());
  }
  m.components = std::move(by_coordinate);
  return m;
}

int scan_peaks(std::span<const EdgeEvent> detected, double angle, const CalibrationOptions& o,
               std::vector<Peak>* out) {
  const auto coords = project(detected, angle);
  const auto peaks =
      find_peaks_detailed(build_histogram_1d(coords, o.projection_bin_ps), o.smoothing_sigma_bins, o.min_prominence);
  if (out) *out = peaks;
  return static_cast<int>(peaks.size());
}

struct TrialOutcome {
  double objective = std::numeric_limits<double>::infinity();
  std::string message;
  std::optional<CalibrationModel> model;
};

AngleSearchResult search(std::span<const EdgeEvent> detected, const ReferenceLabels& ref,
                         const CalibrationOptions& options) {
  const int k = ref.model.component_count();
  std::map<double, TrialOutcome> memo;
  auto run = [&](double angle) {
    TrialOutcome t;
    try {
      t.model = fit_at_angle(detected, ref.labels, k, angle, options);
      t.objective = off_diagonal_mass(t.model->crosstalk);
    } catch (const Error& e) {
      t.message = angle_context(angle) + ": " + e.what();
    }
    return t;
  };

  if (!(options.coarse_step_deg > 0.0)) throw DomainError("coarse_step_deg must be > 0");
  const auto grid_n = static_cast<std::size_t>(std::ceil(180.0 / options.coarse_step_deg - 1e-9));
  std::vector<double> grid(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) grid[i] = rad(options.coarse_step_deg * static_cast<double>(i));
  // pi/2 is always probed so the result is never worse than the falling edge alone.
  if (std::find(grid.begin(), grid.end(), kPi / 2) == grid.end()) grid.push_back(kPi / 2);
  std::vector<TrialOutcome> grid_out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { grid_out[i] = run(grid[i]); });
  for (std::size_t i = 0; i < grid.size(); ++i) memo.emplace(grid[i], std::move(grid_out[i]));

  auto best_of_memo = [&] {
    auto best = memo.end();
    for (auto it = memo.begin(); it != memo.end(); ++it) {
      if (best == memo.end() || it->second.objective < best->second.objective) best = it;
    }
    return best;
  };

  auto grid_best = best_of_memo();
  if (std::isfinite(grid_best->second.objective)) {
    const double step = rad(options.coarse_step_deg);
    auto objective = [&](double raw) {
      const double a = normalize_angle(raw);
      auto it = memo.find(a);
      if (it == memo.end()) it = memo.emplace(a, run(a)).first;
      return it->second.objective;
    };
    golden_section_minimize(objective, grid_best->first - step, grid_best->first + step,
                            rad(options.angle_tolerance_deg));
  }

  AngleSearchResult r;
  r.reference_angle = ref.angle;
  for (const auto& [a, t] : memo) r.trials.push_back({a, t.objective, t.message});
  const auto best = best_of_memo();
  if (!std::isfinite(best->second.objective)) {
    std::string msg = "no trial angle produced a usable fit";
    if (!memo.empty()) msg += "; first failure: " + memo.begin()->second.message;
    throw CalibrationError(msg);
  }
  r.model = *best->second.model;
  r.model.mode = CalibrationMode::Optimal;
  r.objective = best->second.objective;
  return r;
}

}  // namespace

const char* to_string(CalibrationMode m) {
  return m == CalibrationMode::Optimal ? "optimal" : "rising_only";
}

CalibrationMode parse_calibration_mode(const std::string& s) {
  if (s == "optimal") return CalibrationMode::Optimal;
  if (s == "rising_only" || s == "rising-only") return CalibrationMode::RisingOnly;
  throw ConfigError("unknown calibration mode '" + s + "' (expected optimal or rising_only)");
}

std::vector<VoigtComponent> CalibrationModel::components_by_coordinate() const {
  std::vector<VoigtComponent> out = components;
  if (orientation < 0) std::reverse(out.begin(), out.end());
  return out;
}

int CalibrationModel::classify(double x) const {
  const int k = component_count();
  if (orientation > 0) {
    const auto bucket = std::lower_bound(boundaries.begin(), boundaries.end(), x) - boundaries.begin();
    return static_cast<int>(bucket) + 1;
  }
  const auto bucket = std::upper_bound(boundaries.begin(), boundaries.end(), x) - boundaries.begin();
  return k - static_cast<int>(bucket);
}

void CalibrationModel::validate() const {
  const std::size_t k = components.size();
  if (k < 1) throw CalibrationError("model has no components");
  if (!(angle >= 0.0 && angle < kPi)) throw CalibrationError("model angle outside [0, pi)");
  if (orientation != 1 && orientation != -1) throw CalibrationError("model orientation must be +1 or -1");
  if (boundaries.size() + 1 != k) throw CalibrationError("model needs exactly k-1 boundaries");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    if (!(boundaries[i] < boundaries[i + 1])) throw CalibrationError("model boundaries not strictly ascending");
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = components[i];
    if (!std::isfinite(c.center) || !(c.sigma > 0.0) || !(c.gamma >= 0.0) || !(c.weight > 0.0 && c.weight <= 1.0)) {
      throw CalibrationError("model component " + std::to_string(i) + " has invalid parameters");
    }
    if (i + 1 < k && !(orientation * (components[i + 1].center - c.center) > 0.0)) {
      throw CalibrationError("model component centers not monotone in photon number");
    }
  }
  if (crosstalk.size() != k) throw CalibrationError("crosstalk matrix has wrong size");
  for (const auto& row : crosstalk) {
    if (row.size() != k) throw CalibrationError("crosstalk matrix is not square");
    double s = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw CalibrationError("crosstalk entry negative or NaN");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw CalibrationError("crosstalk row does not sum to 1");
  }
}

CalibrationModel fit_at_angle(std::span<const EdgeEvent> detected, std::span<const int> labels, int k,
                              double angle, const CalibrationOptions& options) {
  if (detected.empty()) throw EmptySampleError("no detected events");
  angle = normalize_angle(angle);
  const auto coords = project(detected, angle);
  const auto init = components_from_labels(coords, labels, k);
  int orientation = 1;
  if (k > 1) {
    for (int j = 0; j + 1 < k; ++j) {
      const double d = init[j + 1].center - init[j].center;
      const int s = d > 0.0 ? 1 : -1;
      if (j == 0) {
        orientation = s;
      } else if (s != orientation || d == 0.0) {
        throw CalibrationError("photon-number clusters are not ordered along this projection");
      }
    }
  }
  const auto fit = fit_mixture(coords, k, init, options.fit);
  auto model = assemble(fit.components, orientation, angle, detected.front().detector, fit.report);
  model.mode = angle == 0.0 ? CalibrationMode::RisingOnly : CalibrationMode::Optimal;
  return model;
}

std::vector<int> label_events(std::span<const EdgeEvent> detected, const CalibrationModel& model) {
  const auto coords = project(detected, model.angle);
  std::vector<int> labels(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) labels[i] = model.classify(coords[i]) - 1;
  return labels;
}

ReferenceLabels reference_labels(std::span<const EdgeEvent> detected, int k, const CalibrationOptions& options) {
  if (detected.empty()) throw EmptySampleError("no detected events");
  if (!(options.peak_scan_step_deg > 0.0)) throw DomainError("peak_scan_step_deg must be > 0");

  // Best-resolved projection: most peaks, then largest summed prominence.
  const auto n = static_cast<std::size_t>(std::ceil(180.0 / options.peak_scan_step_deg - 1e-9));
  std::vector<std::vector<Peak>> scans(n);
  parallel_for(n, [&](std::size_t i) {
    scan_peaks(detected, rad(options.peak_scan_step_deg * static_cast<double>(i)), options, &scans[i]);
  });
  auto prominence = [](const std::vector<Peak>& p) {
    return std::accumulate(p.begin(), p.end(), 0.0, [](double s, const Peak& q) { return s + q.prominence; });
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const auto& a = scans[i];
    const auto& b = scans[best];
    if (a.size() > b.size() || (a.size() == b.size() && prominence(a) > prominence(b))) best = i;
  }
  std::vector<Peak> peaks = scans[best];
  if (peaks.empty()) throw CalibrationError("no peaks found in any projection");
  if (k <= 0) k = static_cast<int>(peaks.size());
  if (static_cast<int>(peaks.size()) < k) {
    throw CalibrationError("requested " + std::to_string(k) + " components but at most " +
                           std::to_string(peaks.size()) + " peaks are resolved");
  }
  if (static_cast<int>(peaks.size()) > k) {
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
    peaks.resize(k);
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.position < b.position; });
  }

  ReferenceLabels ref;
  ref.angle = rad(options.peak_scan_step_deg * static_cast<double>(best));
  ref.peak_count = static_cast<int>(scans[best].size());
  const auto coords = project(detected, ref.angle);
  std::vector<double> positions;
  for (const auto& p : peaks) positions.push_back(p.position);
  MixtureFit fit;
  try {
    fit = fit_mixture(coords, k, std::span<const double>(positions), options.fit);
  } catch (const Error& e) {
    throw CalibrationError("reference fit at " + angle_context(ref.angle) + " failed: " + e.what());
  }

  // Photon number grows with the mean pulse width (fall - rise) of a cluster.
  int orientation = 1;
  if (k > 1) {
    const auto cuts = boundaries_with_fallback(fit.components);
    std::vector<double> width_sum(k, 0.0);
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto b = std::lower_bound(cuts.begin(), cuts.end(), coords[i]) - cuts.begin();
      width_sum[b] += detected[i].fall_delay_ps - detected[i].rise_delay_ps;
      count[b] += 1.0;
    }
    if (count.front() == 0.0 || count.back() == 0.0) throw CalibrationError("empty outer cluster in reference fit");
    orientation = width_sum.back() / count.back() > width_sum.front() / count.front() ? 1 : -1;
  }
  ref.model = assemble(fit.components, orientation, ref.angle, detected.front().detector, fit.report);
  ref.labels = label_events(detected, ref.model);
  return ref;
}

AngleSearchResult optimize_angle(std::span<const EdgeEvent> events, int k, const CalibrationOptions& options) {
  const auto detected = detected_only(events);
  if (detected.empty()) throw EmptySampleError("no detected events");
  const auto ref = reference_labels(detected, k, options);
  return search(detected, ref, options);
}

CalibrationResult calibrate(std::span<const EdgeEvent> events, const CalibrationOptions& options) {
  const auto detected = detected_only(events);
  if (detected.empty()) throw EmptySampleError("no detected events");
  const auto ref = reference_labels(detected, options.components, options);
  CalibrationResult r;
  r.peak_count = ref.peak_count;
  r.search = search(detected, ref, options);
  r.optimal = r.search.model;
  const int k = ref.model.component_count();
  try {
    r.rising_only = fit_at_angle(detected, ref.labels, k, 0.0, options);
  } catch (const Error& e) {
    throw CalibrationError("rising-edge-only fit failed: " + std::string(e.what()));
  }
  r.rising_only.mode = CalibrationMode::RisingOnly;
  return r;
}

}  // namespace pnr
