#pragma once

#include <complex>
#include <random>
#include <span>

namespace pnr {

/// One cluster of the projected-timing mixture. The profile integrates to
/// `weight`; photon number is implied by position in an ordered list.
struct VoigtComponent {
  double center = 0.0;  ///< ps
  double sigma = 1.0;   ///< Gaussian standard deviation, ps, > 0
  double gamma = 0.0;   ///< Lorentzian half width at half maximum, ps, >= 0
  double weight = 1.0;  ///< mixture weight in (0, 1]
};

/// Faddeeva function w(z) = exp(-z^2) erfc(-i z) for Im z >= 0, via
/// Weideman's 40-term rational expansion (absolute error ~1e-14), with a
/// Laplace continued fraction for |z| > 8.
std::complex<double> faddeeva(std::complex<double> z);

/// Unit-area Voigt profile (Gaussian sigma convolved with Lorentzian gamma)
/// at offset dx from the center. gamma == 0 takes the exact Gaussian path.
double voigt_profile(double dx, double sigma, double gamma);

/// voigt_profile for many offsets sharing sigma and gamma; out.size() must
/// be at least dx.size().
void voigt_profile_batch(std::span<const double> dx, double sigma, double gamma, std::span<double> out);

/// weight * voigt_profile(x - center).
double voigt_pdf(double x, const VoigtComponent& c);

/// Full width at half maximum (Olivero-Longbothum approximation, 0.02%).
double voigt_fwhm(double sigma, double gamma);

/// Draw one sample from the component's unit-area profile.
double sample_voigt(const VoigtComponent& c, std::mt19937_64& rng);

}  // namespace pnr
