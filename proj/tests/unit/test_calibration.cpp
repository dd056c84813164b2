#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "fixtures.hpp"
#include "pnr/calib.hpp"
#include "pnr/errors.hpp"

using namespace pnr;

namespace {

constexpr double kPi = std::numbers::pi;

CalibrationModel three_class_model(int orientation) {
  CalibrationModel m;
  m.angle = 0.5;
  m.orientation = orientation;
  const double s = orientation;
  m.components = {{0.0, 2.0, 0.1, 0.3}, {s * 10.0, 2.0, 0.1, 0.4}, {s * 20.0, 2.0, 0.1, 0.3}};
  m.boundaries = orientation > 0 ? std::vector<double>{5.0, 15.0} : std::vector<double>{-15.0, -5.0};
  m.crosstalk = crosstalk_matrix(m.components_by_coordinate(), m.boundaries);
  if (orientation < 0) {
    // Rows and columns by photon number, coordinate order reversed.
    Matrix r(3, std::vector<double>(3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r[i][j] = m.crosstalk[2 - i][2 - j];
    m.crosstalk = r;
  }
  return m;
}

std::vector<EdgeEvent> detected_sample(std::uint64_t triggers, std::uint64_t seed) {
  const auto sim = fixture::run(fixture::coherent(3.43, triggers, seed));
  return detected_only(pair_edges(sim.tags, kDefaultPairingWindowPs, Detector::A).events);
}

}  // namespace

TEST(CalibrationModel, ClassifyAscending) {
  const auto m = three_class_model(1);
  m.validate();
  EXPECT_EQ(m.classify(-100.0), 1);
  EXPECT_EQ(m.classify(5.0), 1);  // tie goes to the lower photon number
  EXPECT_EQ(m.classify(5.0 + 1e-9), 2);
  EXPECT_EQ(m.classify(15.0), 2);
  EXPECT_EQ(m.classify(1e6), 3);
}

TEST(CalibrationModel, ClassifyDescending) {
  const auto m = three_class_model(-1);
  m.validate();
  EXPECT_EQ(m.classify(1.0), 1);
  EXPECT_EQ(m.classify(-5.0), 1);  // tie goes to the lower photon number
  EXPECT_EQ(m.classify(-5.0 - 1e-9), 2);
  EXPECT_EQ(m.classify(-15.0), 2);
  EXPECT_EQ(m.classify(-1e6), 3);
}

TEST(CalibrationModel, ValidateCatchesBrokenModels) {
  auto m = three_class_model(1);
  m.angle = kPi;
  EXPECT_THROW(m.validate(), CalibrationError);
  m = three_class_model(1);
  m.boundaries = {15.0, 5.0};
  EXPECT_THROW(m.validate(), CalibrationError);
  m = three_class_model(1);
  m.crosstalk[0][0] += 0.01;
  EXPECT_THROW(m.validate(), CalibrationError);
  m = three_class_model(1);
  m.orientation = -1;
  EXPECT_THROW(m.validate(), CalibrationError);
  m = three_class_model(1);
  m.components[1].sigma = 0.0;
  EXPECT_THROW(m.validate(), CalibrationError);
}

TEST(CalibrationModel, JsonRoundTrip) {
  for (int o : {1, -1}) {
    auto m = three_class_model(o);
    m.detector = Detector::B;
    m.mode = CalibrationMode::RisingOnly;
    m.fallback_pairs = {1};
    const auto back = calibration_model_from_json(to_json(m));
    EXPECT_EQ(back.detector, Detector::B);
    EXPECT_EQ(back.mode, CalibrationMode::RisingOnly);
    EXPECT_EQ(back.orientation, o);
    EXPECT_DOUBLE_EQ(back.angle, m.angle);
    EXPECT_EQ(back.boundaries, m.boundaries);
    EXPECT_EQ(back.crosstalk, m.crosstalk);
    EXPECT_EQ(back.fallback_pairs, m.fallback_pairs);
    ASSERT_EQ(back.components.size(), 3u);
    EXPECT_DOUBLE_EQ(back.components[2].center, m.components[2].center);
  }
}

TEST(CalibrationModel, LoadChecksModeAndPath) {
  const auto dir = fixture::scratch_dir("calib_load");
  const auto path = (dir / "single.json").string();
  std::ofstream(path) << to_json(three_class_model(1));
  EXPECT_NO_THROW(load_calibration(path, CalibrationMode::Optimal));
  EXPECT_THROW(load_calibration(path, CalibrationMode::RisingOnly), CalibrationError);
  EXPECT_THROW(load_calibration((dir / "absent.json").string(), CalibrationMode::Optimal), IoError);
  const auto junk = (dir / "junk.json").string();
  std::ofstream(junk) << "{not json";
  EXPECT_THROW(load_calibration(junk, CalibrationMode::Optimal), CalibrationError);
  EXPECT_THROW(calibration_model_from_json(R"({"mode":"optimal"})"), CalibrationError);
}

TEST(AngleSearch, BeatsBothEdgeAxesAndIsDeterministic) {
  const auto det = detected_sample(25'000, 41);
  const auto r = optimize_angle(det, 5);
  double at0 = INFINITY, at90 = INFINITY;
  for (const auto& t : r.trials) {
    EXPECT_GE(t.angle, 0.0);
    EXPECT_LT(t.angle, kPi);
    EXPECT_GE(t.objective, r.objective - 1e-15);
    if (std::abs(t.angle) < 1e-9) at0 = t.objective;
    if (std::abs(t.angle - kPi / 2) < 1e-9) at90 = t.objective;
  }
  ASSERT_TRUE(std::isfinite(at0));
  EXPECT_LE(r.objective, at0);
  EXPECT_LE(r.objective, at90);
  EXPECT_NEAR(r.objective, off_diagonal_mass(r.model.crosstalk), 1e-12);
  r.model.validate();

  const auto again = optimize_angle(det, 5);
  EXPECT_EQ(again.model.angle, r.model.angle);
  EXPECT_EQ(again.model.boundaries, r.model.boundaries);
}

TEST(AngleSearch, RejectsEmptySample) {
  EXPECT_THROW(calibrate(std::vector<EdgeEvent>{}), EmptySampleError);
}

TEST(Calibrate, OptimalBeatsRisingOnly) {
  const auto det = detected_sample(30'000, 42);
  const auto r = calibrate(det);
  r.optimal.validate();
  r.rising_only.validate();
  EXPECT_EQ(r.rising_only.angle, 0.0);
  EXPECT_EQ(r.rising_only.component_count(), r.optimal.component_count());
  EXPECT_GE(r.peak_count, 4);
  EXPECT_LT(off_diagonal_mass(r.optimal.crosstalk), off_diagonal_mass(r.rising_only.crosstalk));
  // Every event is assigned to exactly one class.
  const auto labels = label_events(det, r.optimal);
  ASSERT_EQ(labels.size(), det.size());
  for (int l : labels) {
    EXPECT_GE(l, 0);
    EXPECT_LT(l, r.optimal.component_count());
  }
}

TEST(Calibrate, DisjointHalvesAgreeOnAngle) {
  const auto det = detected_sample(100'000, 43);
  const auto mid = det.begin() + static_cast<std::ptrdiff_t>(det.size() / 2);
  const std::vector<EdgeEvent> first(det.begin(), mid), second(mid, det.end());
  const double a = calibrate(first).optimal.angle;
  const double b = calibrate(second).optimal.angle;
  EXPECT_NEAR(a * 180.0 / kPi, b * 180.0 / kPi, 2.0);
}
