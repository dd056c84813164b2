#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include "pnr/calib.hpp"
#include "pnr/errors.hpp"
#include "pnr/numeric.hpp"

namespace pnr {

namespace {

constexpr int kScanPoints = 512;

// Root of g on [a, b] where g(a) > 0 >= g(b).
double bisect(const std::function<double(double)>& g, double a, double b) {
  for (int i = 0; i < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++i) {
    const double m = 0.5 * (a + b);
    if (g(m) > 0.0) {
      a = m;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

std::optional<double> crossing(const VoigtComponent& lo, const VoigtComponent& hi, bool weighted) {
  const double wl = weighted ? lo.weight : 1.0;
  const double wh = weighted ? hi.weight : 1.0;
  auto g = [&](double x) {
    return wl * voigt_profile(x - lo.center, lo.sigma, lo.gamma) -
           wh * voigt_profile(x - hi.center, hi.sigma, hi.gamma);
  };
  const double a = lo.center, b = hi.center;
  double prev_x = a, prev_g = g(a);
  for (int i = 1; i <= kScanPoints; ++i) {
    const double x = a + (b - a) * i / kScanPoints;
    const double gx = g(x);
    if (prev_g > 0.0 && gx <= 0.0) return bisect(g, prev_x, x);
    prev_x = x;
    prev_g = gx;
  }
  return std::nullopt;
}

void check_components(std::span<const VoigtComponent> comps) {
  if (comps.size() < 2) throw DomainError("boundaries need at least 2 components");
  for (std::size_t i = 0; i + 1 < comps.size(); ++i) {
    if (!(comps[i].center < comps[i + 1].center)) {
      throw DomainError("component centers must be strictly ascending");
    }
  }
}

// Mass of a unit Gaussian (center, sigma) on [lo, hi].
double gaussian_mass(double center, double sigma, double lo, double hi) {
  if (!(lo < hi)) return 0.0;
  const double s = sigma * std::sqrt(2.0);
  const double zl = (lo - center) / s, zh = (hi - center) / s;
  // Pick the tail form that avoids cancellation.
  if (zl >= 0.0) return 0.5 * (std::erfc(zl) - std::erfc(zh));
  if (zh <= 0.0) return 0.5 * (std::erfc(-zh) - std::erfc(-zl));
  return 1.0 - 0.5 * std::erfc(-zl) - 0.5 * std::erfc(zh);
}

// Mass of a unit-area Voigt on [lo, hi]; either bound may be infinite.
// Written as the Gaussian mass averaged over the Lorentzian shift
// c + gamma tan(theta), theta uniform on (-pi/2, pi/2). For |theta| > pi/4
// the variable is phi = pi/2 - |theta| so the far shifts gamma / tan(phi)
// keep full precision when gamma << sigma. Breakpoints sit where the shift
// passes each finite bound, which keeps every piece smooth.
double voigt_mass(const VoigtComponent& c, double lo, double hi) {
  if (!(lo < hi)) return 0.0;
  if (c.gamma == 0.0) return gaussian_mass(c.center, c.sigma, lo, hi);
  const double quarter_pi = std::numbers::pi / 4;
  std::vector<double> central{-quarter_pi, quarter_pi}, upper{0.0, quarter_pi},
      lower{0.0, quarter_pi};
  for (double b : {lo, hi}) {
    if (!std::isfinite(b)) continue;
    for (double m : {-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const double d = b - c.center - m * c.sigma;
      if (std::abs(d) <= c.gamma) {
        central.push_back(std::atan(d / c.gamma));
      } else {
        (d > 0 ? upper : lower).push_back(std::atan(c.gamma / std::abs(d)));
      }
    }
  }
  auto mass_at = [&](double shift) { return gaussian_mass(c.center + shift, c.sigma, lo, hi); };
  auto sum_pieces = [](std::vector<double>& pts, const std::function<double(double)>& f) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      total += integrate_absolute(f, pts[i], pts[i + 1], 1e-14, 12);
    }
    return total;
  };
  const double total =
      sum_pieces(central, [&](double t) { return mass_at(c.gamma * std::tan(t)); }) +
      sum_pieces(upper, [&](double p) { return mass_at(c.gamma / std::tan(p)); }) +
      sum_pieces(lower, [&](double p) { return mass_at(-c.gamma / std::tan(p)); });
  return total / std::numbers::pi;
}

}  // namespace

std::vector<double> optimize_boundaries(std::span<const VoigtComponent> components, BoundaryRule rule) {
  check_components(components);
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < components.size(); ++i) {
    const auto b = crossing(components[i], components[i + 1], rule == BoundaryRule::WeightedDensity);
    if (!b) {
      throw DegenerateOverlapError("densities of components " + std::to_string(i) + " and " +
                                   std::to_string(i + 1) + " do not cross between their centers");
    }
    out.push_back(*b);
  }
  return out;
}

std::vector<double> boundaries_with_fallback(std::span<const VoigtComponent> components,
                                             std::vector<int>* fallback_pairs) {
  check_components(components);
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < components.size(); ++i) {
    auto b = crossing(components[i], components[i + 1], true);
    if (!b) {
      b = crossing(components[i], components[i + 1], false);
      if (!b) {
        throw DegenerateOverlapError("components " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                     " overlap without a density crossing");
      }
      if (fallback_pairs) fallback_pairs->push_back(static_cast<int>(i));
    }
    out.push_back(*b);
  }
  return out;
}

Matrix crosstalk_matrix(std::span<const VoigtComponent> components, std::span<const double> boundaries) {
  const std::size_t k = components.size();
  if (boundaries.size() + 1 != k) throw DomainError("need exactly k-1 boundaries");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    if (!(boundaries[i] < boundaries[i + 1])) throw DomainError("boundaries must be strictly ascending");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  Matrix m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double lo = j == 0 ? -inf : boundaries[j - 1];
      const double hi = j + 1 == k ? inf : boundaries[j];
      m[i][j] = voigt_mass(components[i], lo, hi);
    }
  }
  return m;
}

double off_diagonal_mass(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) {
      if (i != j) s += m[i][j];
    }
  }
  return s;
}

}  // namespace pnr
