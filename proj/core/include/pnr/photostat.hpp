#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnr/decode.hpp"

namespace pnr {

/// Photon-number histogram over n = 0..n_max. With aggregate_top the last
/// bin means "n >= n_max".
struct NumberDistribution {
  std::vector<std::uint64_t> counts;
  bool aggregate_top = true;

  int n_max() const { return static_cast<int>(counts.size()) - 1; }
  std::uint64_t total() const;
  double mean() const;
};

NumberDistribution number_distribution(std::span<const PhotonRecord> records, int n_max = 5,
                                       bool aggregate_top = true);

/// e^{-mu} mu^n / n!, evaluated in log space.
double poisson_pmf(int n, double mu);
/// P(N >= n) for N ~ Poisson(mu).
double poisson_upper_tail(int n, double mu);

struct PoissonFit {
  double mu = 0.0;
  double std_error = 0.0;  ///< from the observed Fisher information
  double ci_low = 0.0;     ///< 95% Wald interval
  double ci_high = 0.0;
  double log_likelihood = 0.0;
  int top_category = 4;  ///< categories 0..top-1 and ">= top"
  std::vector<double> observed;
  std::vector<double> expected;
  double chi_square_pearson = 0.0;  ///< sum (O - E)^2 / E
  double chi_square_neyman = 0.0;   ///< sum (O - E)^2 / O over O > 0
  int degrees_of_freedom = 0;       ///< categories - 2
  double reduced_chi_square = 0.0;  ///< Pearson / dof

  std::string to_json() const;
};

/// Maximum-likelihood mean of a Poisson law observed through the categories
/// {0, .., top-1, >= top}. Needs total >= 100 (InsufficientDataError). All
/// counts at n = 0 gives mu = 0; all counts in the top category throws
/// UnboundedEstimateError.
PoissonFit fit_poisson_mu(const NumberDistribution& dist, int top_category = 4);

struct JointDistribution {
  int n_max = 5;  ///< top row/column aggregates n >= n_max
  std::vector<std::vector<std::uint64_t>> counts;  ///< counts[n_a][n_b]
  double coincidence_window_ps = 0.0;              ///< metadata only

  std::uint64_t total() const;
  std::uint64_t at(int n_a, int n_b) const { return counts[n_a][n_b]; }
  NumberDistribution marginal_a() const;
  NumberDistribution marginal_b() const;
  std::string to_json() const;
  void write_csv(const std::string& path) const;
};

/// Pairs records by trigger index. Throws AlignmentError listing trigger
/// indices present in only one of the two sequences.
JointDistribution build_jpnd(std::span<const PhotonRecord> records_a, std::span<const PhotonRecord> records_b,
                             double window_ps, int n_max = 5);

struct EfficiencyEstimate {
  double eta_a = 0.0;
  double eta_b = 0.0;
  double eta_a_error = 0.0;  ///< binomial standard error
  double eta_b_error = 0.0;
  std::uint64_t coincidences = 0;
  std::uint64_t singles_a = 0;  ///< triggers with n_a >= 1
  std::uint64_t singles_b = 0;

  std::string to_json() const;
};

/// Klyshko estimators eta_a = C / S_b and eta_b = C / S_a with C the (1,1)
/// count. Valid for single-pair emission. Throws InsufficientDataError when
/// either channel has no detections.
EfficiencyEstimate estimate_efficiency(const JointDistribution& split);

struct HomContrast {
  std::uint64_t noon_20 = 0, noon_02 = 0, noon_11 = 0;
  std::uint64_t split_20 = 0, split_02 = 0, split_11 = 0;
  std::uint64_t noon_triggers = 0, split_triggers = 0;
  /// (noon (1,1) per trigger) / (split (1,1) per trigger).
  double ratio = 0.0;
  double ratio_error = 0.0;  ///< Poisson propagation

  std::string to_json() const;
};

/// Throws DomainError when n_max differs and UndefinedRatioError when the
/// split configuration has no (1,1) events.
HomContrast hom_contrast(const JointDistribution& noon, const JointDistribution& split);

/// n, count, fraction, poisson_expected (from `fit`, aggregated like the
/// distribution's top bin).
void write_distribution_csv(const std::string& path, const NumberDistribution& dist, const PoissonFit* fit);

}  // namespace pnr
