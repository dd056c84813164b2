#include "pnr/voigt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace pnr {

namespace {

constexpr int kTerms = 40;

struct WeidemanTable {
  double L;
  std::array<double, kTerms> a;  // a[m] multiplies Z^m
};

// Coefficients from a 4N-point DFT of exp(-t^2)(L^2 + t^2) sampled on the
// tangent grid t = L tan(theta / 2).
WeidemanTable make_table() {
  constexpr int M = 2 * kTerms;
  constexpr int M2 = 2 * M;
  WeidemanTable tab{};
  tab.L = std::sqrt(kTerms / std::numbers::sqrt2);
  std::array<double, M2> f{};
  for (int k = -M + 1; k <= M - 1; ++k) {
    const double theta = k * std::numbers::pi / M;
    const double t = tab.L * std::tan(theta / 2.0);
    f[k + M] = std::exp(-t * t) * (tab.L * tab.L + t * t);
  }
  std::array<double, M2> shifted{};
  for (int i = 0; i < M2; ++i) shifted[i] = f[(i + M) % M2];
  for (int m = 1; m <= kTerms; ++m) {
    double re = 0.0;
    for (int j = 0; j < M2; ++j) re += shifted[j] * std::cos(2.0 * std::numbers::pi * j * m / M2);
    tab.a[m - 1] = re / M2;
  }
  return tab;
}

const WeidemanTable& table() {
  static const WeidemanTable tab = make_table();
  return tab;
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
  const double x = z.real(), y = z.imag();
  if (x * x + y * y > 64.0) {
    // Laplace continued fraction, 10 levels; relative error ~1e-13 for |z| > 8.
    double tr = x, ti = y;
    for (int k = 10; k >= 1; --k) {
      const double d = tr * tr + ti * ti;
      const double h = 0.5 * k;
      tr = x - h * tr / d;
      ti = y + h * ti / d;
    }
    const double d = tr * tr + ti * ti;
    const double c = 1.0 / std::sqrt(std::numbers::pi);
    return {c * ti / d, c * tr / d};
  }
  const auto& tab = table();
  // Real arithmetic throughout; std::complex multiply/divide carry inf/nan
  // recovery branches that dominate the cost here.
  const double dr = tab.L + y, di = -x;  // L - i z
  const double nr = tab.L - y, ni = x;   // L + i z
  const double dd = dr * dr + di * di;
  const double zr = (nr * dr + ni * di) / dd;
  const double zi = (ni * dr - nr * di) / dd;
  double pr = tab.a[kTerms - 1], pi = 0.0;
  for (int m = kTerms - 2; m >= 0; --m) {
    const double t = pr * zr - pi * zi + tab.a[m];
    pi = pr * zi + pi * zr;
    pr = t;
  }
  // 1/denom and 1/denom^2
  const double ir = dr / dd, ii = -di / dd;
  const double i2r = ir * ir - ii * ii, i2i = 2.0 * ir * ii;
  const double c = 1.0 / std::sqrt(std::numbers::pi);
  return {2.0 * (pr * i2r - pi * i2i) + c * ir, 2.0 * (pr * i2i + pi * i2r) + c * ii};
}

double voigt_profile(double dx, double sigma, double gamma) {
  if (gamma <= 0.0) {
    const double u = dx / sigma;
    return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  }
  const double s = sigma * std::numbers::sqrt2;
  const std::complex<double> z(dx / s, gamma / s);
  return faddeeva(z).real() / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

void voigt_profile_batch(std::span<const double> dx, double sigma, double gamma, std::span<double> out) {
  const std::size_t n = dx.size();
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  if (gamma <= 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = dx[i] / sigma;
      out[i] = std::exp(-0.5 * u * u) * norm;
    }
    return;
  }
  const auto& tab = table();
  const double inv_s = 1.0 / (sigma * std::numbers::sqrt2);
  const double y = gamma * inv_s;
  const double c = 1.0 / std::sqrt(std::numbers::pi);
  // Lanes are interleaved so the 40-step Horner chains overlap.
  constexpr std::size_t W = 8;
  for (std::size_t base = 0; base < n; base += W) {
    const std::size_t len = std::min(W, n - base);
    double x[W], zr[W], zi[W], ir[W], ii[W], pr[W], pi[W];
    bool any_near = false;
    for (std::size_t j = 0; j < W; ++j) {
      x[j] = j < len ? dx[base + j] * inv_s : 0.0;
      any_near = any_near || (j < len && x[j] * x[j] + y * y <= 64.0);
    }
    if (any_near) {
      for (std::size_t j = 0; j < W; ++j) {
        const double dr = tab.L + y, di = -x[j];
        const double nr = tab.L - y, ni = x[j];
        const double dd = dr * dr + di * di;
        zr[j] = (nr * dr + ni * di) / dd;
        zi[j] = (ni * dr - nr * di) / dd;
        ir[j] = dr / dd;
        ii[j] = -di / dd;
        pr[j] = tab.a[kTerms - 1];
        pi[j] = 0.0;
      }
      for (int m = kTerms - 2; m >= 0; --m) {
        for (std::size_t j = 0; j < W; ++j) {
          const double t = pr[j] * zr[j] - pi[j] * zi[j] + tab.a[m];
          pi[j] = pr[j] * zi[j] + pi[j] * zr[j];
          pr[j] = t;
        }
      }
    }
    for (std::size_t j = 0; j < len; ++j) {
      double re;
      if (x[j] * x[j] + y * y > 64.0) {
        re = faddeeva({x[j], y}).real();
      } else {
        const double i2r = ir[j] * ir[j] - ii[j] * ii[j], i2i = 2.0 * ir[j] * ii[j];
        re = 2.0 * (pr[j] * i2r - pi[j] * i2i) + c * ir[j];
      }
      out[base + j] = re * norm;
    }
  }
}

double voigt_pdf(double x, const VoigtComponent& c) {
  return c.weight * voigt_profile(x - c.center, c.sigma, c.gamma);
}

double voigt_fwhm(double sigma, double gamma) {
  const double fg = 2.0 * sigma * std::sqrt(2.0 * std::numbers::ln2);
  const double fl = 2.0 * gamma;
  return 0.5346 * fl + std::sqrt(0.2166 * fl * fl + fg * fg);
}

double sample_voigt(const VoigtComponent& c, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, c.sigma);
  double x = c.center + gauss(rng);
  if (c.gamma > 0.0) {
    std::cauchy_distribution<double> lorentz(0.0, c.gamma);
    x += lorentz(rng);
  }
  return x;
}

}  // namespace pnr
