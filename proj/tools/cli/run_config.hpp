#pragma once

#include <optional>
#include <string>

#include "pnr/calib.hpp"
#include "pnr/detector_sim.hpp"
#include "pnr/pairing.hpp"

namespace pnr::cli {

struct CalibrateSettings {
  Detector detector = Detector::A;
  double window_ps = kDefaultPairingWindowPs;
  CalibrationOptions options;
};

struct DecodeSettings {
  double window_ps = kDefaultPairingWindowPs;
  CalibrationMode mode = CalibrationMode::Optimal;
  /// Truth classes above this fold into it in the confusion comparison.
  int compare_up_to = 5;
};

struct StatsSettings {
  int n_max = 5;
  int top_category = 4;
};

struct JpndSettings {
  int n_max = 5;
  double window_ps = kDefaultPairingWindowPs;
};

/// Parsed --config file. Every section is optional; unknown sections and
/// unknown keys inside a section are rejected.
///
///   {"simulate": {...}, "calibrate": {...}, "decode": {...},
///    "stats": {...}, "jpnd": {...}}
///
/// The simulate section uses the simulation config schema unchanged.
struct RunConfig {
  SimulationConfig simulate;
  CalibrateSettings calibrate;
  DecodeSettings decode;
  StatsSettings stats;
  JpndSettings jpnd;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace pnr::cli
