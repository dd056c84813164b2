#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pnr/calib.hpp"
#include "pnr/errors.hpp"
#include "pnr/numeric.hpp"

namespace pnr {

namespace {

constexpr double kMinSigma = 1e-3;

// Free layout: [center, log sigma, sqrt gamma] per component, then k-1
// weight logits (the last component's logit is pinned to zero).
// Shared layout: k centers, log sigma, sqrt gamma, then the k-1 logits.
struct Codec {
  std::size_t k;
  bool shared;

  std::size_t logit_offset() const { return shared ? k + 2 : 3 * k; }

  std::vector<double> encode(std::span<const VoigtComponent> comps) const {
    std::vector<double> x;
    if (shared) {
      double ws = 0.0, sigma = 0.0, gamma = 0.0;
      for (const auto& c : comps) {
        x.push_back(c.center);
        ws += c.weight;
        sigma += c.weight * c.sigma;
        gamma += c.weight * c.gamma;
      }
      x.push_back(std::log(std::max(sigma / ws, kMinSigma)));
      x.push_back(std::sqrt(std::max(gamma / ws, 0.0)));
    } else {
      for (const auto& c : comps) {
        x.push_back(c.center);
        x.push_back(std::log(std::max(c.sigma, kMinSigma)));
        x.push_back(std::sqrt(std::max(c.gamma, 0.0)));
      }
    }
    const double last = std::max(comps.back().weight, 1e-12);
    for (std::size_t i = 0; i + 1 < k; ++i) x.push_back(std::log(std::max(comps[i].weight, 1e-12) / last));
    return x;
  }

  std::vector<VoigtComponent> decode(const std::vector<double>& x) const {
    std::vector<VoigtComponent> comps(k);
    const std::size_t lo = logit_offset();
    double max_logit = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) max_logit = std::max(max_logit, x[lo + i]);
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (shared) {
        comps[i].center = x[i];
        comps[i].sigma = std::max(std::exp(x[k]), kMinSigma);
        comps[i].gamma = x[k + 1] * x[k + 1];
      } else {
        comps[i].center = x[3 * i];
        comps[i].sigma = std::max(std::exp(x[3 * i + 1]), kMinSigma);
        comps[i].gamma = x[3 * i + 2] * x[3 * i + 2];
      }
      const double logit = i + 1 < k ? x[lo + i] : 0.0;
      comps[i].weight = std::exp(logit - max_logit);
      norm += comps[i].weight;
    }
    for (auto& c : comps) c.weight /= norm;
    return comps;
  }

  std::vector<double> steps(std::span<const VoigtComponent> init) const {
    std::vector<double> st(logit_offset() + k - 1, 0.1);
    double mean_sigma = 0.0;
    for (const auto& c : init) mean_sigma += std::max(c.sigma, kMinSigma) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double s = std::max(init[i].sigma, kMinSigma);
      if (shared) {
        st[i] = 0.2 * s;
      } else {
        st[3 * i] = 0.2 * s;
        st[3 * i + 1] = 0.1;
        st[3 * i + 2] = 0.2 * std::sqrt(s);
      }
    }
    if (shared) {
      st[k] = 0.1;
      st[k + 1] = 0.2 * std::sqrt(mean_sigma);
    }
    return st;
  }
};

std::vector<double> flatten(std::span<const VoigtComponent> comps) {
  std::vector<double> out;
  for (const auto& c : comps) out.insert(out.end(), {c.center, c.sigma, c.gamma, c.weight});
  return out;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

std::vector<VoigtComponent> components_from_labels(std::span<const double> coords,
                                                   std::span<const int> labels, int k) {
  if (coords.size() != labels.size()) throw DomainError("coords and labels differ in length");
  std::vector<std::vector<double>> members(k);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const int l = labels[i];
    if (l >= 0 && l < k) members[l].push_back(coords[i]);
  }
  const double n = static_cast<double>(coords.size());
  std::vector<VoigtComponent> comps(k);
  for (int j = 0; j < k; ++j) {
    auto& m = members[j];
    if (m.size() < 3) {
      throw CalibrationError("photon-number class " + std::to_string(j + 1) +
                             " has too few events to initialize a fit");
    }
    const double med = median(m);
    std::vector<double> dev(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) dev[i] = std::abs(m[i] - med);
    const double sigma = std::max(1.4826 * median(dev), 0.05);
    comps[j] = {med, sigma, 0.02 * sigma, static_cast<double>(m.size()) / n};
  }
  return comps;
}

MixtureFit fit_mixture(std::span<const double> coords, int k, std::span<const VoigtComponent> init,
                       const MixtureFitOptions& options) {
  if (k < 1) throw DomainError("component count must be >= 1");
  if (static_cast<int>(init.size()) != k) throw DomainError("initial component count differs from k");
  if (coords.size() < 50 * static_cast<std::size_t>(k)) {
    throw InsufficientDataError("mixture fit needs at least 50 events per component (have " +
                                std::to_string(coords.size()) + " for k=" + std::to_string(k) + ")");
  }
  const Histogram1D hist = build_histogram_1d(coords, options.bin_width_ps);
  const std::size_t nb = hist.counts.size();
  std::vector<double> centers(nb);
  for (std::size_t b = 0; b < nb; ++b) centers[b] = hist.axis.center(b);
  const double total = hist.total();
  const Codec codec{static_cast<std::size_t>(k), options.shared_shape};

  std::vector<double> density(nb), offsets(nb), profile(nb);
  auto mixture_density = [&](const std::vector<VoigtComponent>& comps) {
    std::fill(density.begin(), density.end(), 0.0);
    for (const auto& c : comps) {
      for (std::size_t b = 0; b < nb; ++b) offsets[b] = centers[b] - c.center;
      voigt_profile_batch(offsets, c.sigma, c.gamma, profile);
      for (std::size_t b = 0; b < nb; ++b) density[b] += c.weight * profile[b];
    }
  };
  auto neg_log_likelihood = [&](const std::vector<double>& x) {
    const auto comps = codec.decode(x);
    mixture_density(comps);
    double norm = 0.0, ll = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      norm += density[b];
      if (hist.counts[b] > 0.0) {
        if (!(density[b] > 0.0)) return std::numeric_limits<double>::infinity();
        ll += hist.counts[b] * std::log(density[b]);
      }
    }
    if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
    return -(ll - total * std::log(norm));
  };

  const auto x0 = codec.encode(init);
  const auto steps = codec.steps(init);

  SimplexOptions so;
  so.max_evaluations = options.max_evaluations;
  so.f_tolerance = options.f_tolerance;
  so.x_tolerance = 1e-4;
  const SimplexResult r = nelder_mead(neg_log_likelihood, x0, steps, so);
  auto comps = codec.decode(r.x);
  if (!r.converged) {
    throw FitError("mixture fit did not converge within " + std::to_string(options.max_evaluations) +
                       " evaluations",
                   flatten(comps), -r.value);
  }

  MixtureFit fit;
  std::sort(comps.begin(), comps.end(),
            [](const VoigtComponent& a, const VoigtComponent& b) { return a.center < b.center; });
  fit.components = comps;

  auto& rep = fit.report;
  rep.log_likelihood = -r.value;
  rep.evaluations = r.evaluations;
  rep.log_likelihood_trace.reserve(r.best_trace.size());
  for (double v : r.best_trace) rep.log_likelihood_trace.push_back(-v);

  mixture_density(comps);
  const double norm = std::accumulate(density.begin(), density.end(), 0.0);
  rep.expected.resize(nb);
  rep.residuals.resize(nb);
  double chi2 = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double e = total * density[b] / norm;
    rep.expected[b] = e;
    rep.residuals[b] = e > 0.0 ? (hist.counts[b] - e) / std::sqrt(e) : 0.0;
    if (e >= 5.0) {
      chi2 += rep.residuals[b] * rep.residuals[b];
      ++rep.chi_square_bins;
    }
  }
  rep.degrees_of_freedom = std::max(1, rep.chi_square_bins - static_cast<int>(x0.size()));
  rep.reduced_chi_square = chi2 / rep.degrees_of_freedom;
  rep.histogram = hist;
  return fit;
}

MixtureFit fit_mixture(std::span<const double> coords, int k, std::span<const double> peaks,
                       const MixtureFitOptions& options) {
  if (static_cast<int>(peaks.size()) != k) {
    throw CalibrationError("expected " + std::to_string(k) + " peaks, got " + std::to_string(peaks.size()));
  }
  std::vector<double> sorted(peaks.begin(), peaks.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> labels(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), coords[i]);
    std::size_t j = static_cast<std::size_t>(it - sorted.begin());
    if (j == sorted.size() || (j > 0 && coords[i] - sorted[j - 1] <= sorted[j] - coords[i])) --j;
    labels[i] = static_cast<int>(j);
  }
  auto init = components_from_labels(coords, labels, k);
  for (int j = 0; j < k; ++j) init[j].center = sorted[j];
  return fit_mixture(coords, k, init, options);
}

}  // namespace pnr
