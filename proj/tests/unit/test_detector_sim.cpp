#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pnr/detector_sim.hpp"
#include "pnr/errors.hpp"
#include "pnr/pairing.hpp"

using namespace pnr;

TEST(EdgeDelays, MatchDenseGridScan) {
  const PulseModelParams p;
  for (int n = 1; n <= 5; ++n) {
    const auto e = edge_delays(n, p);
    const auto g = oracle::grid_crossings(n, p, 0.01);
    EXPECT_NEAR(e.rise_ps, g.rise_ps, 0.05) << "n=" << n;
    EXPECT_NEAR(e.fall_ps, g.fall_ps, 0.05) << "n=" << n;
  }
}

TEST(EdgeDelays, StrictlyMonotoneInPhotonNumber) {
  for (double sat : {0.3, 0.6, 1.0}) {
    PulseModelParams p;
    p.saturation = sat;
    p.max_photons = 10;
    for (int n = 1; n < p.max_photons; ++n) {
      const auto a = edge_delays(n, p), b = edge_delays(n + 1, p);
      EXPECT_GT(a.rise_ps, b.rise_ps) << "sat " << sat << " n " << n;
      EXPECT_LT(a.fall_ps, b.fall_ps) << "sat " << sat << " n " << n;
    }
  }
}

TEST(EdgeDelays, VanishingThresholdGivesZeroRise) {
  PulseModelParams p;
  p.threshold = 1e-7;
  for (int n = 1; n <= p.max_photons; ++n) EXPECT_LT(edge_delays(n, p).rise_ps, 1e-3);
}

TEST(EdgeDelays, RejectsOutOfRangeAndUndetectable) {
  PulseModelParams p;
  EXPECT_THROW(edge_delays(0, p), DomainError);
  EXPECT_THROW(edge_delays(p.max_photons + 1, p), DomainError);
  PulseModelParams slow;
  slow.hotspot_rise_scale_ps = 1e6;  // rise far slower than the decay: peak below threshold
  EXPECT_THROW(slow.validate(), UndetectablePhotonNumberError);
  PulseModelParams bad;
  bad.threshold = 1.5;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Defaults, PassValidation) {
  const auto d = default_params();
  EXPECT_NO_THROW(d.pulse.validate());
  EXPECT_NO_THROW(d.jitter.validate());
  EXPECT_NO_THROW(d.source.validate());
  EXPECT_DOUBLE_EQ(d.source.repetition_rate_hz, 100e3);
  EXPECT_DOUBLE_EQ(d.source.efficiency_a, 0.86);
  EXPECT_DOUBLE_EQ(d.jitter.detector_rms_ps, 8.1);
  EXPECT_DOUBLE_EQ(d.jitter.tagger_rms_ps, 1.3);
  EXPECT_DOUBLE_EQ(d.jitter.detector_b_rms_ps, 9.2);
  EXPECT_EQ(d.pulse.max_photons, 6);
  EXPECT_NEAR(d.source.mu * d.source.efficiency_a, 3.43, 1e-12);
}

TEST(Source, ZeroMeanCoherentIsDark) {
  SourceSpec s;
  s.mu = 0.0;
  for (const auto& t : sample_source(s, 10'000, 3)) {
    EXPECT_EQ(t.true_n_a, 0u);
    EXPECT_EQ(t.true_n_b, 0u);
  }
}

TEST(Source, IdealNoonHasNoCoincidences) {
  const auto c = fixture::pairs(SourceKind::Noon2, 0.5, 1.0, 100'000, 4);
  std::uint64_t bunched = 0;
  for (const auto& t : sample_source(c.source, c.n_triggers, c.seed)) {
    EXPECT_FALSE(t.true_n_a == 1 && t.true_n_b == 1);
    bunched += (t.true_n_a == 2 && t.true_n_b == 0) || (t.true_n_a == 0 && t.true_n_b == 2);
  }
  EXPECT_GT(bunched, 40'000u);
}

TEST(Source, SplitPairsFeedBothArms) {
  const auto c = fixture::pairs(SourceKind::SpdcPairs, 0.3, 1.0, 50'000, 5);
  for (const auto& t : sample_source(c.source, c.n_triggers, c.seed)) {
    EXPECT_EQ(t.true_n_a, t.true_n_b);
    EXPECT_LE(t.true_n_a, 1u);
  }
}

TEST(Source, ThinnedMeanWithinBinomialError) {
  SourceSpec s;  // defaults: efficiency 0.86
  const std::uint64_t n = 1'000'000;
  const auto truth = sample_source(s, n, 11);
  double sum = 0.0;
  for (const auto& t : truth) sum += t.true_n_a;
  const double mean = sum / static_cast<double>(n);
  const double expect = s.efficiency_a * s.mu;
  // Thinned Poisson is Poisson(eta mu): variance of the mean is eta mu / n.
  EXPECT_LT(std::abs(mean - expect), 3.0 * std::sqrt(expect / static_cast<double>(n)));
}

TEST(Source, DetectedCountsArePoissonByChiSquare) {
  SourceSpec s;
  const std::uint64_t n = 1'000'000;
  const auto truth = sample_source(s, n, 12);
  const int top = 10;
  std::vector<double> observed(top + 1, 0.0);
  for (const auto& t : truth) observed[std::min<std::uint32_t>(t.true_n_a, top)] += 1.0;
  const auto p = oracle::poisson_categories(s.efficiency_a * s.mu, top);
  double chi2 = 0.0;
  for (int k = 0; k <= top; ++k) {
    const double e = p[static_cast<std::size_t>(k)] * static_cast<double>(n);
    chi2 += (observed[static_cast<std::size_t>(k)] - e) * (observed[static_cast<std::size_t>(k)] - e) / e;
  }
  const boost::math::chi_squared dist(top);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(Source, DeterministicForSeed) {
  SourceSpec s;
  EXPECT_EQ(sample_source(s, 40'000, 7), sample_source(s, 40'000, 7));
  EXPECT_NE(sample_source(s, 40'000, 7), sample_source(s, 40'000, 8));
}

TEST(Simulation, NoiselessTagsSitAtEdgeDelays) {
  auto c = fixture::coherent(3.43, 2000, 5);
  c.jitter = {0.0, 0.0, 0.0};
  const auto sim = fixture::run(c);
  const auto paired = pair_edges(sim.tags, kDefaultPairingWindowPs, Detector::A);
  for (const auto& e : paired.events) {
    const auto n = sim.truth[e.trigger_index].true_n_a;
    ASSERT_EQ(e.has_detection, n > 0);
    if (n == 0) continue;
    const auto d = edge_delays(static_cast<int>(std::min<std::uint32_t>(n, 6)), c.pulse);
    EXPECT_NEAR(e.rise_delay_ps, c.pulse.latency_ps + d.rise_ps, 0.05 + 1e-9);
    EXPECT_NEAR(e.fall_delay_ps, c.pulse.latency_ps + d.fall_ps, 0.05 + 1e-9);
  }
}

TEST(Simulation, TriggersAtRepetitionPeriod) {
  auto c = fixture::coherent(1.0, 100, 5);
  const auto sim = fixture::run(c);
  std::vector<Timestamp> trig;
  for (const auto& t : sim.tags) {
    if (t.channel == channel::kTrigger) trig.push_back(t.timestamp);
  }
  ASSERT_EQ(trig.size(), 100u);
  for (std::size_t i = 0; i < trig.size(); ++i) EXPECT_EQ(trig[i], static_cast<Timestamp>(i) * 100'000'000);
}

TEST(Simulation, ByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto c = fixture::coherent(3.43, 60'000, 21);
  const auto a = fixture::run(c);
  ::setenv("PNR_THREADS", "3", 1);
  const auto b = fixture::run(c);
  ::setenv("PNR_THREADS", "1", 1);
  const auto d = fixture::run(c);
  ::unsetenv("PNR_THREADS");
  EXPECT_EQ(a.tags, b.tags);
  EXPECT_EQ(a.tags, d.tags);
  EXPECT_EQ(a.truth, b.truth);
}

TEST(Simulation, RepetitionRateDoesNotChangeDelays) {
  auto c = fixture::coherent(3.43, 20'000, 9);
  const auto slow = fixture::run(c);
  c.source.repetition_rate_hz = 500e3;
  const auto fast = fixture::run(c);
  const auto ps = pair_edges(slow.tags, kDefaultPairingWindowPs, Detector::A);
  const auto pf = pair_edges(fast.tags, kDefaultPairingWindowPs, Detector::A);
  ASSERT_EQ(ps.events.size(), pf.events.size());
  for (std::size_t i = 0; i < ps.events.size(); ++i) {
    ASSERT_EQ(ps.events[i].has_detection, pf.events[i].has_detection);
    if (!ps.events[i].has_detection) continue;
    // Only the 0.1 ps rounding of absolute times may differ.
    EXPECT_NEAR(ps.events[i].rise_delay_ps, pf.events[i].rise_delay_ps, 0.1 + 1e-9);
    EXPECT_NEAR(ps.events[i].fall_delay_ps, pf.events[i].fall_delay_ps, 0.1 + 1e-9);
  }
}

namespace {

struct Moments {
  double rise_sd = 0.0, fall_sd = 0.0, corr = 0.0;
};

/// Per-photon-number rise/fall spread and correlation from a simulation.
std::map<int, Moments> moments_by_n(const SimulatedStream& sim) {
  const auto paired = pair_edges(sim.tags, kDefaultPairingWindowPs, Detector::A);
  std::map<int, std::vector<std::pair<double, double>>> by_n;
  for (const auto& e : paired.events) {
    if (e.has_detection) by_n[static_cast<int>(sim.truth[e.trigger_index].true_n_a)].push_back({e.rise_delay_ps, e.fall_delay_ps});
  }
  std::map<int, Moments> out;
  for (const auto& [n, v] : by_n) {
    if (v.size() < 5000) continue;
    double mr = 0, mf = 0;
    for (auto [r, f] : v) mr += r, mf += f;
    mr /= static_cast<double>(v.size());
    mf /= static_cast<double>(v.size());
    double vr = 0, vf = 0, cov = 0;
    for (auto [r, f] : v) {
      vr += (r - mr) * (r - mr);
      vf += (f - mf) * (f - mf);
      cov += (r - mr) * (f - mf);
    }
    out[n] = {std::sqrt(vr / static_cast<double>(v.size() - 1)), std::sqrt(vf / static_cast<double>(v.size() - 1)),
              cov / std::sqrt(vr * vf)};
  }
  return out;
}

}  // namespace

TEST(Simulation, JitterAddsInQuadrature) {
  const auto sim = fixture::run(fixture::coherent(3.43, 100'000, 31));
  const double expect = std::sqrt(8.1 * 8.1 + 1.3 * 1.3);
  const auto m = moments_by_n(sim);
  ASSERT_GE(m.size(), 5u);
  for (const auto& [n, mo] : m) {
    EXPECT_NEAR(mo.rise_sd / expect, 1.0, 0.05) << "n=" << n;
    EXPECT_NEAR(mo.fall_sd / expect, 1.0, 0.05) << "n=" << n;
  }
}

TEST(Simulation, SharedJitterCorrelatesEdges) {
  const auto sim = fixture::run(fixture::coherent(3.43, 100'000, 32));
  const double expect = 8.1 * 8.1 / (8.1 * 8.1 + 1.3 * 1.3);
  for (const auto& [n, mo] : moments_by_n(sim)) EXPECT_NEAR(mo.corr / expect, 1.0, 0.05) << "n=" << n;
}

TEST(Config, StrictJsonRoundTrip) {
  SimulationConfig c = fixture::coherent(2.0, 123, 9);
  c.source.kind = SourceKind::Noon2;
  c.jitter.detector_rms_ps = 4.0;
  const auto back = parse_simulation_config(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(parse_simulation_config(R"({"n_trigers": 5})"), ConfigError);
  EXPECT_THROW(parse_simulation_config(R"({"source": {"mu": 1, "colour": 2}})"), ConfigError);
  EXPECT_THROW(parse_simulation_config(R"({"source": {"kind": "thermal"}})"), ConfigError);
  EXPECT_THROW(parse_simulation_config(R"({"source": {"pair_prob": 2}})"), ConfigError);
  EXPECT_THROW(parse_simulation_config("{not json"), ConfigError);
}

TEST(Config, TruthCsvRoundTrip) {
  const auto dir = fixture::scratch_dir("truth_csv");
  const auto truth = sample_source(fixture::pairs(SourceKind::Noon2, 0.4, 0.7, 500, 2).source, 500, 2);
  write_truth_csv((dir / "t.csv").string(), truth);
  EXPECT_EQ(read_truth_csv((dir / "t.csv").string()), truth);
}
