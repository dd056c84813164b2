#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pnr/errors.hpp"
#include "pnr/pairing.hpp"

using namespace pnr;

namespace {

TimeTag tag(std::uint8_t ch, double ps) { return {ch, ps_to_ticks(ps)}; }

bool same_event(const EdgeEvent& a, const EdgeEvent& b) {
  auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return a.trigger_index == b.trigger_index && a.trigger_time == b.trigger_time &&
         a.has_detection == b.has_detection && a.malformed == b.malformed && eq(a.rise_delay_ps, b.rise_delay_ps) &&
         eq(a.fall_delay_ps, b.fall_delay_ps);
}

/// Interleaved stream with glitches: missing edges, extra edges, both
/// detectors, dense and sparse regions.
std::vector<TimeTag> messy_stream(std::size_t triggers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TimeTag> tags;
  double t = 0.0;
  for (std::size_t i = 0; i < triggers; ++i) {
    t += 200.0 + 3000.0 * u(rng);
    tags.push_back(tag(channel::kTrigger, t));
    for (Detector d : {Detector::A, Detector::B}) {
      const int extra = static_cast<int>(u(rng) * 3.0);
      for (int e = 0; e < extra; ++e) {
        const double rise = t - 300.0 + 2500.0 * u(rng);
        if (u(rng) < 0.85) tags.push_back(tag(rising_channel(d), rise));
        if (u(rng) < 0.85) tags.push_back(tag(falling_channel(d), rise + 1.0 + 600.0 * u(rng)));
      }
    }
  }
  std::sort(tags.begin(), tags.end(), tag_less);
  return tags;
}

}  // namespace

TEST(Pairing, DirectExample) {
  const std::vector<TimeTag> tags{tag(0, 0.0), tag(1, 50.0), tag(2, 300.0)};
  const auto r = pair_edges(tags, 1000.0, Detector::A);
  ASSERT_EQ(r.events.size(), 1u);
  const auto& e = r.events[0];
  EXPECT_TRUE(e.has_detection);
  EXPECT_DOUBLE_EQ(e.rise_delay_ps, 50.0);
  EXPECT_DOUBLE_EQ(e.fall_delay_ps, 300.0);
  EXPECT_EQ(r.diagnostics.detections, 1u);
  EXPECT_EQ(r.diagnostics.orphan_edges, 0u);
}

TEST(Pairing, TriggerWithoutEdgesIsZeroCandidate) {
  const std::vector<TimeTag> tags{tag(0, 0.0), tag(0, 5000.0), tag(1, 5050.0), tag(2, 5200.0)};
  const auto r = pair_edges(tags, 1000.0, Detector::A);
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_FALSE(r.events[0].has_detection);
  EXPECT_FALSE(r.events[0].malformed);
  EXPECT_TRUE(std::isnan(r.events[0].rise_delay_ps));
  EXPECT_TRUE(r.events[1].has_detection);
  EXPECT_EQ(r.diagnostics.zero_events, 1u);
}

TEST(Pairing, FallWithoutRiseIsMalformedNotFatal) {
  const std::vector<TimeTag> tags{tag(0, 0.0), tag(2, 300.0), tag(0, 5000.0), tag(1, 5050.0), tag(2, 5200.0)};
  const auto r = pair_edges(tags, 1000.0, Detector::A);
  EXPECT_FALSE(r.events[0].has_detection);
  EXPECT_TRUE(r.events[0].malformed);
  EXPECT_EQ(r.diagnostics.malformed_events, 1u);
  EXPECT_EQ(r.diagnostics.orphan_edges, 1u);
  EXPECT_TRUE(r.events[1].has_detection);
}

TEST(Pairing, OtherDetectorIgnored) {
  const std::vector<TimeTag> tags{tag(0, 0.0), tag(3, 40.0), tag(4, 200.0)};
  const auto a = pair_edges(tags, 1000.0, Detector::A);
  EXPECT_FALSE(a.events[0].has_detection);
  const auto b = pair_edges(tags, 1000.0, Detector::B);
  EXPECT_TRUE(b.events[0].has_detection);
  EXPECT_EQ(b.events[0].detector, Detector::B);
}

TEST(Pairing, EdgesConsumedOnce) {
  // Two triggers whose windows overlap share one pulse: only the first gets it.
  const std::vector<TimeTag> tags{tag(0, 0.0), tag(0, 10.0), tag(1, 50.0), tag(2, 300.0)};
  const auto r = pair_edges(tags, 1000.0, Detector::A);
  EXPECT_TRUE(r.events[0].has_detection);
  EXPECT_FALSE(r.events[1].has_detection);
}

TEST(Pairing, RejectsBadInput) {
  const std::vector<TimeTag> unsorted{tag(0, 10.0), tag(0, 0.0)};
  EXPECT_THROW(pair_edges(unsorted, 1000.0, Detector::A), OrderingError);
  const std::vector<TimeTag> ok{tag(0, 0.0)};
  EXPECT_THROW(pair_edges(ok, 0.0, Detector::A), DomainError);
  EXPECT_THROW(pair_edges(ok, -5.0, Detector::A), DomainError);
}

TEST(Pairing, MatchesBruteForceOnRandomStreams) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto tags = messy_stream(1500, seed);
    ASSERT_LE(tags.size(), 10'000u);
    for (Detector d : {Detector::A, Detector::B}) {
      for (double window : {400.0, 1500.0}) {
        const auto fast = pair_edges(tags, window, d);
        const auto slow = oracle::brute_force_pairing(tags, window, d);
        ASSERT_EQ(fast.events.size(), slow.size());
        for (std::size_t i = 0; i < slow.size(); ++i) {
          ASSERT_TRUE(same_event(fast.events[i], slow[i])) << "seed " << seed << " event " << i;
        }
      }
    }
  }
}

TEST(Pairing, InvariantsOnRandomStreams) {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const auto tags = messy_stream(3000, seed);
    const double window = 1200.0;
    const auto r = pair_edges(tags, window, Detector::A);
    const auto triggers = std::count_if(tags.begin(), tags.end(), [](auto& t) { return t.channel == 0; });
    EXPECT_EQ(r.events.size(), static_cast<std::size_t>(triggers));
    std::uint64_t detections = 0;
    for (const auto& e : r.events) {
      if (!e.has_detection) continue;
      ++detections;
      EXPECT_GE(e.rise_delay_ps, 0.0);
      EXPECT_LT(e.rise_delay_ps, e.fall_delay_ps);
      EXPECT_LE(e.fall_delay_ps, window);
    }
    EXPECT_EQ(detections, r.diagnostics.detections);
    EXPECT_EQ(r.diagnostics.detections + r.diagnostics.zero_events, r.diagnostics.triggers);
    EXPECT_EQ(detected_only(r.events).size(), detections);
  }
}

TEST(Pairing, DiagnosticsJson) {
  PairingDiagnostics d{3, 2, 1, 4, 1};
  EXPECT_EQ(d.to_json(),
            R"({"triggers":3,"detections":2,"zero_events":1,"orphan_edges":4,"malformed_events":1})");
}
