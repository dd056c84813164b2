#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pnr::oracle {

Crossings grid_crossings(int n, const PulseModelParams& p, double step_ps) {
  const double amp = p.saturation == 1.0
                         ? p.amplitude_1 * n
                         : p.amplitude_1 * (1.0 - std::pow(p.saturation, n)) / (1.0 - p.saturation);
  const double tau_fall = p.kinetic_inductance_time_ns * 1000.0;
  auto v = [&](double t) {
    return amp * (1.0 - std::exp(-n * t / p.hotspot_rise_scale_ps)) * std::exp(-t / tau_fall);
  };
  const double horizon = 40.0 * tau_fall;
  Crossings c{-1.0, -1.0};
  double prev = v(0.0) - p.threshold;
  for (std::int64_t i = 1;; ++i) {
    const double t = static_cast<double>(i) * step_ps;
    if (t > horizon) break;
    const double cur = v(t) - p.threshold;
    const double t_prev = t - step_ps;
    if (c.rise_ps < 0.0 && prev <= 0.0 && cur > 0.0) c.rise_ps = t_prev + step_ps * (-prev) / (cur - prev);
    if (prev > 0.0 && cur <= 0.0) c.fall_ps = t_prev + step_ps * prev / (prev - cur);
    prev = cur;
  }
  return c;
}

double voigt_by_convolution(double x, double sigma, double gamma) {
  const double s2pi = sigma * std::sqrt(2.0 * std::numbers::pi);
  if (gamma == 0.0) return std::exp(-0.5 * x * x / (sigma * sigma)) / s2pi;
  auto integrand = [&](double t) {
    const double g = std::exp(-0.5 * (x - t) * (x - t) / (sigma * sigma)) / s2pi;
    return g * gamma / (std::numbers::pi * (t * t + gamma * gamma));
  };
  const double lo = x - 13.0 * sigma, hi = x + 13.0 * sigma;
  std::vector<double> pts{lo, hi};
  for (double m : {-3.0, -1.0, 0.0, 1.0, 3.0}) pts.push_back(x + m * sigma);
  for (double m : {-125.0, -25.0, -5.0, -1.0, 0.0, 1.0, 5.0, 25.0, 125.0}) pts.push_back(m * gamma);
  std::erase_if(pts, [&](double p) { return p < lo || p > hi; });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, pts[i], pts[i + 1], 15,
                                                                           1e-10);
  }
  return total;
}

double grid_boundary(const VoigtComponent& a, const VoigtComponent& b, double step_ps) {
  double best_x = a.center, best = 0.0, cum = 0.0;
  auto diff = [&](double x) { return voigt_pdf(x, b) - voigt_pdf(x, a); };
  double prev = diff(a.center);
  for (double x = a.center + step_ps; x < b.center; x += step_ps) {
    const double cur = diff(x);
    cum += 0.5 * (prev + cur) * step_ps;
    if (cum < best) {
      best = cum;
      best_x = x;
    }
    prev = cur;
  }
  return best_x;
}

double draw_voigt(const VoigtComponent& c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, c.sigma);
  double x = c.center + normal(rng);
  if (c.gamma > 0.0) {
    std::cauchy_distribution<double> cauchy(0.0, c.gamma);
    x += cauchy(rng);
  }
  return x;
}

MonteCarloCrosstalk monte_carlo_crosstalk(std::span<const VoigtComponent> components,
                                          std::span<const double> boundaries, std::uint64_t samples,
                                          std::uint64_t seed) {
  const std::size_t k = components.size();
  MonteCarloCrosstalk out;
  out.counts.assign(k, std::vector<std::uint64_t>(k, 0));
  out.row_totals.assign(k, 0);
  std::vector<double> w;
  for (const auto& c : components) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::mt19937_64 rng(seed);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::size_t i = pick(rng);
    const double x = draw_voigt(components[i], rng);
    std::size_t bucket = 0;
    while (bucket < boundaries.size() && boundaries[bucket] < x) ++bucket;
    ++out.counts[i][bucket];
    ++out.row_totals[i];
  }
  return out;
}

std::vector<EdgeEvent> brute_force_pairing(std::span<const TimeTag> tags, double window_ps, Detector d) {
  const Timestamp w = ps_to_ticks(window_ps);
  std::vector<char> used(tags.size(), 0);
  std::vector<EdgeEvent> out;
  std::uint64_t index = 0;
  for (const auto& trig : tags) {
    if (trig.channel != channel::kTrigger) continue;
    const Timestamp t0 = trig.timestamp, t1 = t0 + w;
    EdgeEvent ev;
    ev.trigger_index = index++;
    ev.trigger_time = t0;
    ev.detector = d;
    ev.rise_delay_ps = ev.fall_delay_ps = std::nan("");
    std::size_t rise = tags.size();
    for (std::size_t j = 0; j < tags.size(); ++j) {
      const auto& t = tags[j];
      if (!used[j] && t.channel == rising_channel(d) && t.timestamp >= t0 && t.timestamp <= t1 &&
          (rise == tags.size() || t.timestamp < tags[rise].timestamp)) {
        rise = j;
      }
    }
    std::size_t fall = tags.size();
    if (rise < tags.size()) {
      for (std::size_t j = 0; j < tags.size(); ++j) {
        const auto& t = tags[j];
        if (!used[j] && t.channel == falling_channel(d) && t.timestamp > tags[rise].timestamp &&
            t.timestamp <= t1 && (fall == tags.size() || t.timestamp < tags[fall].timestamp)) {
          fall = j;
        }
      }
    }
    if (fall < tags.size()) {
      used[rise] = used[fall] = 1;
      ev.has_detection = true;
      ev.rise_delay_ps = ticks_to_ps(tags[rise].timestamp - t0);
      ev.fall_delay_ps = ticks_to_ps(tags[fall].timestamp - t0);
    } else {
      bool stray_fall = false;
      for (std::size_t j = 0; j < tags.size(); ++j) {
        const auto& t = tags[j];
        stray_fall = stray_fall || (!used[j] && t.channel == falling_channel(d) && t.timestamp >= t0 &&
                                    t.timestamp <= t1);
      }
      ev.malformed = rise < tags.size() || stray_fall;
    }
    out.push_back(ev);
  }
  return out;
}

std::vector<double> poisson_categories(double mu, int top) {
  std::vector<double> p(static_cast<std::size_t>(top) + 1, 0.0);
  double term = std::exp(-mu), below = 0.0;
  for (int n = 0; n < top; ++n) {
    p[static_cast<std::size_t>(n)] = term;
    below += term;
    term *= mu / (n + 1);
  }
  p[static_cast<std::size_t>(top)] = 1.0 - below;
  return p;
}

}  // namespace pnr::oracle
