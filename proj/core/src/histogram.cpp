#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "pnr/calib.hpp"
#include "pnr/errors.hpp"

namespace pnr {

namespace {

Axis auto_axis(double lo, double hi, double width) {
  Axis a;
  a.bin_width = width;
  a.min = lo - 3.0 * width;
  const auto n = static_cast<std::size_t>(std::ceil((hi + 3.0 * width - a.min) / width));
  a.max = a.min + static_cast<double>(std::max<std::size_t>(n, 1)) * width;
  return a;
}

std::vector<double> gaussian_smooth(const std::vector<double>& v, double sigma_bins) {
  if (sigma_bins <= 0.0) return v;
  const int half = static_cast<int>(std::ceil(4.0 * sigma_bins));
  std::vector<double> kernel(2 * half + 1);
  for (int i = -half; i <= half; ++i) kernel[i + half] = std::exp(-0.5 * i * i / (sigma_bins * sigma_bins));
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& k : kernel) k /= norm;
  const int n = static_cast<int>(v.size());
  std::vector<double> out(v.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = -half; j <= half; ++j) {
      const int idx = i + j;
      if (idx >= 0 && idx < n) acc += v[idx] * kernel[j + half];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace

std::size_t Axis::bins() const {
  return static_cast<std::size_t>(std::llround((max - min) / bin_width));
}

std::size_t Axis::index(double x) const {
  const double f = std::floor((x - min) / bin_width);
  if (f < 0.0) return 0;
  return std::min(static_cast<std::size_t>(f), bins() - 1);
}

std::uint64_t Histogram2D::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void Histogram2D::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.precision(10);
  out << "rise_ps\\fall_ps";
  for (std::size_t j = 0; j < fall_axis.bins(); ++j) out << ',' << fall_axis.center(j);
  out << '\n';
  for (std::size_t i = 0; i < rise_axis.bins(); ++i) {
    out << rise_axis.center(i);
    for (std::size_t j = 0; j < fall_axis.bins(); ++j) out << ',' << at(i, j);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

double Histogram1D::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

Histogram2D build_histogram(std::span<const EdgeEvent> events, double rise_bin_ps, double fall_bin_ps) {
  if (!(rise_bin_ps > 0.0) || !(fall_bin_ps > 0.0)) throw DomainError("bin widths must be > 0");
  double rlo = INFINITY, rhi = -INFINITY, flo = INFINITY, fhi = -INFINITY;
  std::size_t n = 0;
  for (const auto& e : events) {
    if (!e.has_detection) continue;
    rlo = std::min(rlo, e.rise_delay_ps);
    rhi = std::max(rhi, e.rise_delay_ps);
    flo = std::min(flo, e.fall_delay_ps);
    fhi = std::max(fhi, e.fall_delay_ps);
    ++n;
  }
  if (n == 0) throw EmptySampleError("no detected events to histogram");
  Histogram2D h;
  h.rise_axis = auto_axis(rlo, rhi, rise_bin_ps);
  h.fall_axis = auto_axis(flo, fhi, fall_bin_ps);
  const std::size_t fb = h.fall_axis.bins();
  h.counts.assign(h.rise_axis.bins() * fb, 0);
  for (const auto& e : events) {
    if (!e.has_detection) continue;
    ++h.counts[h.rise_axis.index(e.rise_delay_ps) * fb + h.fall_axis.index(e.fall_delay_ps)];
  }
  return h;
}

Histogram1D build_histogram_1d(std::span<const double> coords, double bin_width_ps) {
  if (!(bin_width_ps > 0.0)) throw DomainError("bin width must be > 0");
  if (coords.empty()) throw EmptySampleError("no coordinates to histogram");
  const auto [lo, hi] = std::minmax_element(coords.begin(), coords.end());
  Histogram1D h;
  h.axis = auto_axis(*lo, *hi, bin_width_ps);
  h.counts.assign(h.axis.bins(), 0.0);
  for (double x : coords) h.counts[h.axis.index(x)] += 1.0;
  return h;
}

std::vector<double> project(std::span<const EdgeEvent> events, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<double> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (angle == 0.0) {
      out.push_back(e.rise_delay_ps);
    } else if (angle == std::numbers::pi / 2) {
      out.push_back(e.fall_delay_ps);
    } else {
      out.push_back(project_one(e.rise_delay_ps, e.fall_delay_ps, c, s));
    }
  }
  return out;
}

std::vector<Peak> find_peaks_detailed(const Histogram1D& hist, double smoothing_sigma_bins,
                                      double min_prominence) {
  if (hist.counts.empty()) throw EmptySampleError("empty histogram");
  const auto s = gaussian_smooth(hist.counts, smoothing_sigma_bins);
  const double global_max = *std::max_element(s.begin(), s.end());
  std::vector<Peak> peaks;
  if (global_max <= 0.0) return peaks;
  const std::size_t n = s.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(s[i] > s[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    if (j + 1 >= n || !(s[j + 1] < s[i])) {
      i = j + 1;
      continue;
    }
    const double h = s[i];
    double left_min = h;
    for (std::size_t l = i; l-- > 0;) {
      if (s[l] > h) break;
      left_min = std::min(left_min, s[l]);
    }
    double right_min = h;
    for (std::size_t r = j + 1; r < n; ++r) {
      if (s[r] > h) break;
      right_min = std::min(right_min, s[r]);
    }
    const double prominence = h - std::max(left_min, right_min);
    if (prominence >= min_prominence * global_max) {
      double pos = 0.5 * static_cast<double>(i + j);
      if (i == j) {
        const double a = s[i - 1], b = s[i], c = s[i + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) pos += 0.5 * (a - c) / denom;
      }
      peaks.push_back({hist.axis.min + (pos + 0.5) * hist.axis.bin_width, h, prominence});
    }
    i = j + 1;
  }
  return peaks;
}

std::vector<double> find_peaks(const Histogram1D& hist, double smoothing_sigma_bins,
                               double min_prominence) {
  const auto peaks = find_peaks_detailed(hist, smoothing_sigma_bins, min_prominence);
  if (peaks.empty()) throw CalibrationError("no peaks found in projected histogram");
  std::vector<double> out;
  for (const auto& p : peaks) out.push_back(p.position);
  return out;
}

}  // namespace pnr
