#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnr/timetag.hpp"

namespace pnr {

inline constexpr double kDefaultPairingWindowPs = 10'000.0;

/// Edge timing of one detector relative to one trigger.
///
/// When `has_detection` is false the delays are NaN; the trigger is a
/// zero-photon candidate. `malformed` marks triggers whose window held
/// edges that could not be paired (e.g. a falling edge with no rising edge
/// before it); those events also carry has_detection == false.
struct EdgeEvent {
  std::uint64_t trigger_index = 0;
  Timestamp trigger_time = 0;
  double rise_delay_ps = 0.0;
  double fall_delay_ps = 0.0;
  Detector detector = Detector::A;
  bool has_detection = false;
  bool malformed = false;
};

struct PairingDiagnostics {
  std::uint64_t triggers = 0;
  std::uint64_t detections = 0;
  std::uint64_t zero_events = 0;
  /// Detector edge tags (of the paired detector) never consumed into a detection.
  std::uint64_t orphan_edges = 0;
  std::uint64_t malformed_events = 0;

  std::string to_json() const;
};

struct PairingResult {
  std::vector<EdgeEvent> events;
  PairingDiagnostics diagnostics;
};

/// Greedy first-match pairing. For every trigger tag (channel 0), the
/// earliest unconsumed rising tag of `detector` in [trigger, trigger+window]
/// is paired with the earliest unconsumed falling tag strictly after it and
/// still inside the window. One event per trigger, in trigger order.
///
/// Throws OrderingError on unsorted input and DomainError on window <= 0.
PairingResult pair_edges(std::span<const TimeTag> tags, double window_ps, Detector detector);

/// Detected events only (has_detection == true).
std::vector<EdgeEvent> detected_only(std::span<const EdgeEvent> events);

bool has_trigger_channel(std::span<const TimeTag> tags);

}  // namespace pnr
