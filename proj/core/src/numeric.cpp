#include "pnr/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pnr {

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo,
                                      double hi, double x_tolerance, int max_iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  for (int it = 0; it < max_iterations && (b - a) > x_tolerance; ++it) {
    // Ties keep the lower bracket so results are deterministic.
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  return fc <= fd ? ScalarMinimum{c, fc, evals} : ScalarMinimum{d, fd, evals};
}

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& steps,
                          const SimplexOptions& options) {
  const std::size_t n = x0.size();
  const double dn = static_cast<double>(std::max<std::size_t>(n, 2));
  const double alpha = 1.0, beta = 1.0 + 2.0 / dn, gamma = 0.75 - 1.0 / (2.0 * dn),
               delta = 1.0 - 1.0 / dn;

  SimplexResult res;
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  std::vector<std::vector<double>> simplex(n + 1);
  std::vector<double> values(n + 1);
  auto build = [&](const std::vector<double>& center, double scale) {
    simplex[0] = center;
    values[0] = eval(center);
    for (std::size_t i = 0; i < n; ++i) {
      simplex[i + 1] = center;
      simplex[i + 1][i] += scale * steps[i];
      values[i + 1] = eval(simplex[i + 1]);
    }
  };

  build(x0, 1.0);
  double best = *std::min_element(values.begin(), values.end());
  res.best_trace.push_back(best);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  int restarts_left = options.restarts;
  double value_at_restart = std::numeric_limits<double>::infinity();

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t ib = order.front(), iw = order.back(), is = order[n - 1];

    double spread = values[iw] - values[ib];
    double size = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < n; ++k) scale = std::max(scale, std::abs(simplex[ib][k]));
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        size = std::max(size, std::abs(simplex[i][k] - simplex[ib][k]));
      }
    }
    if (spread <= options.f_tolerance && size <= options.x_tolerance * scale) {
      const bool stalled = value_at_restart - values[ib] <= options.f_tolerance;
      if (restarts_left == 0 || stalled) {
        res.converged = true;
        res.x = simplex[ib];
        res.value = values[ib];
        break;
      }
      --restarts_left;
      value_at_restart = values[ib];
      const auto center = simplex[ib];
      build(center, 0.25);
      continue;
    }
    if (evals >= options.max_evaluations) {
      res.x = simplex[ib];
      res.value = values[ib];
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == iw) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    for (std::size_t k = 0; k < n; ++k) xr[k] = centroid[k] + alpha * (centroid[k] - simplex[iw][k]);
    const double fr = eval(xr);
    if (fr < values[ib]) {
      for (std::size_t k = 0; k < n; ++k) xe[k] = centroid[k] + beta * (xr[k] - centroid[k]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[iw] = xe;
        values[iw] = fe;
      } else {
        simplex[iw] = xr;
        values[iw] = fr;
      }
    } else if (fr < values[is]) {
      simplex[iw] = xr;
      values[iw] = fr;
    } else {
      const bool outside = fr < values[iw];
      for (std::size_t k = 0; k < n; ++k) {
        xc[k] = outside ? centroid[k] + gamma * (xr[k] - centroid[k])
                        : centroid[k] - gamma * (centroid[k] - simplex[iw][k]);
      }
      const double fc = eval(xc);
      if (fc < (outside ? fr : values[iw])) {
        simplex[iw] = xc;
        values[iw] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == ib) continue;
          for (std::size_t k = 0; k < n; ++k) {
            simplex[i][k] = simplex[ib][k] + delta * (simplex[i][k] - simplex[ib][k]);
          }
          values[i] = eval(simplex[i]);
        }
      }
    }
    best = std::min(best, *std::min_element(values.begin(), values.end()));
    res.best_trace.push_back(best);
  }
  res.evaluations = evals;
  return res;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double relative_tolerance) {
  if (a == b) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, relative_tolerance, &error);
}

double integrate_absolute(const std::function<double(double)>& f, double a, double b,
                          double absolute_tolerance, int max_depth) {
  if (a == b) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &error);
  if (max_depth == 0 || error <= absolute_tolerance) return v;
  const double mid = 0.5 * (a + b);
  return integrate_absolute(f, a, mid, absolute_tolerance / 2, max_depth - 1) +
         integrate_absolute(f, mid, b, absolute_tolerance / 2, max_depth - 1);
}

}  // namespace pnr
