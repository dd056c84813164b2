#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "pnr/calib.hpp"
#include "pnr/errors.hpp"

using namespace pnr;

namespace {

EdgeEvent detection(double rise, double fall) {
  EdgeEvent e;
  e.rise_delay_ps = rise;
  e.fall_delay_ps = fall;
  e.has_detection = true;
  return e;
}

Histogram1D bumps(std::initializer_list<double> centers, double sigma, int per_bump, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> x;
  for (double c : centers) {
    std::normal_distribution<double> g(c, sigma);
    for (int i = 0; i < per_bump; ++i) x.push_back(g(rng));
  }
  return build_histogram_1d(x, 0.5);
}

}  // namespace

TEST(Histogram2D, SingleEventSingleBin) {
  const std::vector<EdgeEvent> one{detection(120.0, 480.0)};
  const auto h = build_histogram(one, 1.0, 2.0);
  EXPECT_EQ(h.total(), 1u);
  EXPECT_EQ(std::count(h.counts.begin(), h.counts.end(), 1u), 1);
  EXPECT_DOUBLE_EQ(h.rise_axis.min, 117.0);
  EXPECT_DOUBLE_EQ(h.fall_axis.min, 474.0);
  EXPECT_EQ(h.at(h.rise_axis.index(120.0), h.fall_axis.index(480.0)), 1u);
}

TEST(Histogram2D, CountsConservedAndNonDetectionsSkipped) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 30.0);
  std::vector<EdgeEvent> ev;
  for (int i = 0; i < 20'000; ++i) ev.push_back(detection(200.0 + g(rng), 800.0 + g(rng)));
  for (int i = 0; i < 500; ++i) ev.push_back(EdgeEvent{});
  for (double w : {0.3, 1.0, 7.0}) {
    const auto h = build_histogram(ev, w, w * 1.5);
    EXPECT_EQ(h.total(), 20'000u);
    EXPECT_EQ(h.counts.size(), h.rise_axis.bins() * h.fall_axis.bins());
  }
}

TEST(Histogram2D, RejectsEmptyAndBadBins) {
  const std::vector<EdgeEvent> none{EdgeEvent{}};
  EXPECT_THROW(build_histogram(none, 1.0, 1.0), EmptySampleError);
  const std::vector<EdgeEvent> one{detection(1.0, 2.0)};
  EXPECT_THROW(build_histogram(one, 0.0, 1.0), DomainError);
}

TEST(Histogram2D, CsvExport) {
  const std::vector<EdgeEvent> ev{detection(10.0, 20.0), detection(11.0, 23.0)};
  const auto dir = fixture::scratch_dir("hist_csv");
  build_histogram(ev, 1.0, 1.0).write_csv((dir / "h.csv").string());
  const auto text = fixture::read_bytes(dir / "h.csv");
  EXPECT_EQ(text.rfind("rise_ps\\fall_ps,", 0), 0u);
}

TEST(Projection, AxisAngles) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<EdgeEvent> ev;
  for (int i = 0; i < 100; ++i) ev.push_back(detection(u(rng), u(rng)));
  const auto at0 = project(ev, 0.0);
  const auto at90 = project(ev, std::numbers::pi / 2);
  const auto at45 = project(ev, std::numbers::pi / 4);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_EQ(at0[i], ev[i].rise_delay_ps);
    EXPECT_EQ(at90[i], ev[i].fall_delay_ps);
    EXPECT_NEAR(at45[i], (ev[i].rise_delay_ps + ev[i].fall_delay_ps) / std::sqrt(2.0), 1e-9);
  }
}

TEST(Peaks, SingleBump) {
  const auto h = bumps({100.0}, 5.0, 50'000, 1);
  const auto p = find_peaks(h, 3.0, 0.02);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0], 100.0, h.axis.bin_width + 0.3);
}

TEST(Peaks, TwoSeparatedBumps) {
  const auto h = bumps({100.0, 200.0}, 5.0, 30'000, 2);
  const auto p = find_peaks(h, 3.0, 0.02);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], 100.0, 1.0);
  EXPECT_NEAR(p[1], 200.0, 1.0);
  const auto d = find_peaks_detailed(h, 3.0, 0.02);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_GT(d[0].prominence, 0.5 * d[0].height);
}

TEST(Peaks, FlatHistogramHasNoPeak) {
  Histogram1D h;
  h.axis = {0.0, 100.0, 1.0};
  h.counts.assign(100, 0.0);
  EXPECT_THROW(find_peaks(h, 3.0, 0.02), CalibrationError);
  EXPECT_TRUE(find_peaks_detailed(h, 3.0, 0.02).empty());
}

TEST(Peaks, SimulatedModesSitAtNoiselessProjections) {
  const auto cfg = fixture::coherent(3.43, 100'000, 17);
  const auto sim = fixture::run(cfg);
  const auto det = detected_only(pair_edges(sim.tags, kDefaultPairingWindowPs, Detector::A).events);
  const double angle = 0.75 * std::numbers::pi;  // shared jitter cancels along this direction
  const auto coords = project(det, angle);
  const auto peaks = find_peaks(build_histogram_1d(coords, 0.5), 3.0, 0.02);
  ASSERT_GE(peaks.size(), 5u);
  // Noiseless edges: latency plus the threshold crossings of v_n.
  for (int n = 1; n <= 5; ++n) {
    const auto e = edge_delays(n, cfg.pulse);
    const double expect = project_one(cfg.pulse.latency_ps + e.rise_ps, cfg.pulse.latency_ps + e.fall_ps,
                                      std::cos(angle), std::sin(angle));
    const double nearest = *std::min_element(peaks.begin(), peaks.end(), [&](double a, double b) {
      return std::abs(a - expect) < std::abs(b - expect);
    });
    EXPECT_NEAR(nearest, expect, 2.0) << "n=" << n;
  }
}
