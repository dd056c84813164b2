#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnr/pairing.hpp"
#include "pnr/voigt.hpp"

namespace pnr {

// ---------------------------------------------------------------------------
// Histograms

struct Axis {
  double min = 0.0;
  double max = 0.0;
  double bin_width = 1.0;

  std::size_t bins() const;
  double center(std::size_t i) const { return min + (static_cast<double>(i) + 0.5) * bin_width; }
  /// Bin index of x, clamped to the axis.
  std::size_t index(double x) const;
};

/// Auto-ranged to [min - 3 bin, max + 3 bin] on each axis.
struct Histogram2D {
  Axis rise_axis;
  Axis fall_axis;
  std::vector<std::uint64_t> counts;  ///< rise-major: counts[i * fall_bins + j]

  std::uint64_t at(std::size_t rise_bin, std::size_t fall_bin) const {
    return counts[rise_bin * fall_axis.bins() + fall_bin];
  }
  std::uint64_t total() const;
  void write_csv(const std::string& path) const;
};

struct Histogram1D {
  Axis axis;
  std::vector<double> counts;

  double total() const;
};

/// Detected events only; non-detections are skipped. Throws EmptySampleError
/// when nothing remains.
Histogram2D build_histogram(std::span<const EdgeEvent> events, double rise_bin_ps,
                            double fall_bin_ps);
Histogram1D build_histogram_1d(std::span<const double> coords, double bin_width_ps);

// ---------------------------------------------------------------------------
// Projection and peaks

/// rise * cos(angle) + fall * sin(angle). Angle 0 is the rising edge alone.
inline double project_one(double rise_ps, double fall_ps, double cos_a, double sin_a) {
  return rise_ps * cos_a + fall_ps * sin_a;
}
std::vector<double> project(std::span<const EdgeEvent> events, double angle);

struct Peak {
  double position = 0.0;  ///< ps
  double height = 0.0;    ///< smoothed counts
  double prominence = 0.0;
};

/// Gaussian-smoothed local maxima with prominence >= min_prominence * max.
/// Returned in ascending position. Empty result is not an error here.
std::vector<Peak> find_peaks_detailed(const Histogram1D& hist, double smoothing_sigma_bins,
                                      double min_prominence);
/// As above, positions only; throws CalibrationError when no peak is found.
std::vector<double> find_peaks(const Histogram1D& hist, double smoothing_sigma_bins,
                               double min_prominence);

// ---------------------------------------------------------------------------
// Mixture fit

struct MixtureFitOptions {
  double bin_width_ps = 0.5;
  int max_evaluations = 60'000;
  double f_tolerance = 1e-3;  ///< log-likelihood units
  /// One (sigma, gamma) pair for every component; centers and weights stay
  /// free. Suits clusters broadened by the same jitter sources.
  bool shared_shape = false;
};

struct MixtureFitReport {
  double log_likelihood = 0.0;
  double reduced_chi_square = 0.0;
  int chi_square_bins = 0;  ///< bins with expected count >= 5
  int degrees_of_freedom = 0;
  int evaluations = 0;
  Histogram1D histogram;
  std::vector<double> expected;   ///< per-bin expected counts
  std::vector<double> residuals;  ///< per-bin Pearson residuals (0 where expected == 0)
  std::vector<double> log_likelihood_trace;  ///< best value per iteration, non-decreasing
};

struct MixtureFit {
  std::vector<VoigtComponent> components;  ///< ordered by center
  MixtureFitReport report;
};

/// Binned maximum-likelihood fit of a k-component Voigt mixture started from
/// `init`. Requires k >= 1 and coords.size() >= 50 k. Throws FitError
/// carrying the best parameters when the simplex does not converge.
MixtureFit fit_mixture(std::span<const double> coords, int k,
                       std::span<const VoigtComponent> init, const MixtureFitOptions& options = {});
/// Initial components from peak positions (nearest-peak assignment).
MixtureFit fit_mixture(std::span<const double> coords, int k, std::span<const double> peaks,
                       const MixtureFitOptions& options = {});

/// Moment-based initial components for labelled coordinates (label in [0, k)).
std::vector<VoigtComponent> components_from_labels(std::span<const double> coords,
                                                   std::span<const int> labels, int k);

// ---------------------------------------------------------------------------
// Boundaries and crosstalk

enum class BoundaryRule {
  WeightedDensity,  ///< w_k f_k = w_{k+1} f_{k+1}; minimizes pairwise misassigned mass
  EqualDensity,     ///< f_k = f_{k+1}; minimizes the pair's row-normalized crosstalk
};

/// One boundary between each adjacent pair of components (given in
/// coordinate order). Throws DegenerateOverlapError when the densities do
/// not cross between the two centers.
std::vector<double> optimize_boundaries(std::span<const VoigtComponent> components,
                                        BoundaryRule rule = BoundaryRule::WeightedDensity);

/// WeightedDensity per pair, falling back to EqualDensity for pairs whose
/// weighted densities never cross. Indices of fallback pairs are appended to
/// `fallback_pairs` when provided.
std::vector<double> boundaries_with_fallback(std::span<const VoigtComponent> components,
                                             std::vector<int>* fallback_pairs = nullptr);

using Matrix = std::vector<std::vector<double>>;

/// entry(i, j): mass of component i's unit-area profile inside bucket j.
/// Components and boundaries in coordinate order.
Matrix crosstalk_matrix(std::span<const VoigtComponent> components, std::span<const double> boundaries);

double off_diagonal_mass(const Matrix& m);

// ---------------------------------------------------------------------------
// Calibration model

enum class CalibrationMode { RisingOnly, Optimal };
const char* to_string(CalibrationMode m);
CalibrationMode parse_calibration_mode(const std::string& s);

struct CalibrationModel {
  CalibrationMode mode = CalibrationMode::Optimal;
  Detector detector = Detector::A;
  double angle = 0.0;  ///< radians, in [0, pi)
  /// +1 when the projected coordinate grows with photon number, -1 otherwise.
  int orientation = 1;
  /// Index k is photon number k + 1; the last component means ">= k".
  std::vector<VoigtComponent> components;
  /// Ascending cut points in projected coordinate.
  std::vector<double> boundaries;
  /// Row-stochastic, rows and columns indexed by photon number - 1.
  Matrix crosstalk;

  // Fit diagnostics.
  double log_likelihood = 0.0;
  double reduced_chi_square = 0.0;
  std::vector<int> fallback_pairs;

  int component_count() const { return static_cast<int>(components.size()); }
  /// Components in ascending coordinate order.
  std::vector<VoigtComponent> components_by_coordinate() const;
  /// Photon number (>= 1) for a projected coordinate; ties go to the lower
  /// photon number.
  int classify(double coordinate) const;
  void validate() const;
};

struct CalibrationOptions {
  double projection_bin_ps = 0.5;
  double rise_bin_ps = 1.0;
  double fall_bin_ps = 1.0;
  int components = 0;  ///< 0 = peak count of the best-resolved projection
  double smoothing_sigma_bins = 3.0;
  double min_prominence = 0.02;
  double peak_scan_step_deg = 2.0;
  double coarse_step_deg = 10.0;
  double angle_tolerance_deg = 0.05;
  MixtureFitOptions fit{.shared_shape = true};
};

struct AngleTrial {
  double angle = 0.0;
  double objective = 0.0;  ///< +inf when the trial could not be evaluated
  std::string message;
};

struct AngleSearchResult {
  CalibrationModel model;
  double objective = 0.0;
  double reference_angle = 0.0;
  std::vector<AngleTrial> trials;
};

/// Fits a model at a fixed angle. Components are initialized from `labels`
/// (photon number - 1 per event), then re-ordered by photon number.
CalibrationModel fit_at_angle(std::span<const EdgeEvent> detected, std::span<const int> labels,
                              int k, double angle, const CalibrationOptions& options);

/// Photon-number labels for every event under a model.
std::vector<int> label_events(std::span<const EdgeEvent> detected, const CalibrationModel& model);

/// Reference labelling: projection with the most resolved peaks, fitted from
/// those peaks. Photon number grows with (fall - rise) of the cluster means.
struct ReferenceLabels {
  double angle = 0.0;
  int peak_count = 0;
  CalibrationModel model;
  std::vector<int> labels;
};
ReferenceLabels reference_labels(std::span<const EdgeEvent> detected, int k,
                                 const CalibrationOptions& options);

/// Coarse grid over [0, pi) then golden-section refinement around the best
/// grid point, minimizing the crosstalk matrix's off-diagonal mass. The
/// returned model is the best of all evaluated trials.
AngleSearchResult optimize_angle(std::span<const EdgeEvent> events, int k,
                                 const CalibrationOptions& options = {});

struct CalibrationResult {
  CalibrationModel optimal;
  CalibrationModel rising_only;
  AngleSearchResult search;
  int peak_count = 0;
};

/// Full calibration of one detector: component count, optimal angle and a
/// rising-edge-only model with the same component count.
CalibrationResult calibrate(std::span<const EdgeEvent> events, const CalibrationOptions& options = {});

std::string to_json(const CalibrationModel& model);
CalibrationModel calibration_model_from_json(const std::string& text);
/// {"detector": ..., "models": {"optimal": ..., "rising_only": ...}, ...}
std::string calibration_file_json(const CalibrationResult& result);
/// Reads either a single model or a calibration file (selecting `mode`).
CalibrationModel load_calibration(const std::string& path, CalibrationMode mode);

/// Projection histogram with the fitted mixture curve, as CSV columns
/// coordinate, count, fit, then one column per component.
void write_projection_csv(const std::string& path, std::span<const EdgeEvent> detected,
                          const CalibrationModel& model, double bin_width_ps);
void write_matrix_csv(const std::string& path, const Matrix& m);

}  // namespace pnr
