#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace pnr {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section minimization of a unimodal function on [lo, hi].
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo,
                                      double hi, double x_tolerance, int max_iterations = 200);

struct SimplexOptions {
  int max_evaluations = 40'000;
  double f_tolerance = 1e-9;   ///< absolute spread of vertex values at convergence
  /// Largest vertex distance from the best vertex, relative to max(1, |best|).
  double x_tolerance = 1e-7;
  int restarts = 2;            ///< fresh simplices around the optimum after convergence
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  /// Best value after every iteration; never increases.
  std::vector<double> best_trace;
};

/// Nelder-Mead with dimension-adaptive coefficients. `steps` sets the
/// initial simplex edge per coordinate.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& steps,
                          const SimplexOptions& options = {});

/// Adaptive Gauss-Kronrod quadrature; either bound may be infinite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double relative_tolerance = 1e-11);

/// Adaptive Gauss-Kronrod on a finite interval, bisecting until the error
/// estimate of every piece is below its share of `absolute_tolerance`.
/// Suited to summing many pieces where some contribute next to nothing.
double integrate_absolute(const std::function<double(double)>& f, double a, double b,
                          double absolute_tolerance, int max_depth = 20);

}  // namespace pnr
