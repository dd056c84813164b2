#include "pnr/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pnr/errors.hpp"

namespace pnr {

std::string PairingDiagnostics::to_json() const {
  std::ostringstream os;
  os << "{\"triggers\":" << triggers << ",\"detections\":" << detections
     << ",\"zero_events\":" << zero_events << ",\"orphan_edges\":" << orphan_edges
     << ",\"malformed_events\":" << malformed_events << "}";
  return os.str();
}

bool has_trigger_channel(std::span<const TimeTag> tags) {
  return std::any_of(tags.begin(), tags.end(),
                     [](const TimeTag& t) { return t.channel == channel::kTrigger; });
}

PairingResult pair_edges(std::span<const TimeTag> tags, double window_ps, Detector detector) {
  if (!(window_ps > 0.0) || !std::isfinite(window_ps)) {
    throw DomainError("pairing window must be positive");
  }
  const Timestamp window = ps_to_ticks(window_ps);
  const std::uint8_t rise_ch = rising_channel(detector);
  const std::uint8_t fall_ch = falling_channel(detector);

  std::vector<Timestamp> triggers, rises, falls;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (i > 0 && tag_less(tags[i], tags[i - 1])) {
      throw OrderingError("tags not sorted at index " + std::to_string(i));
    }
    const auto& t = tags[i];
    if (t.channel == channel::kTrigger) {
      triggers.push_back(t.timestamp);
    } else if (t.channel == rise_ch) {
      rises.push_back(t.timestamp);
    } else if (t.channel == fall_ch) {
      falls.push_back(t.timestamp);
    }
  }

  PairingResult result;
  result.events.reserve(triggers.size());
  std::vector<char> fall_used(falls.size(), 0);
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::size_t r = 0;        // earliest unconsumed rise candidate
  std::size_t f = 0;        // earliest fall still usable by a detection
  std::size_t f_scan = 0;   // first fall >= current trigger (malformed check)

  for (std::size_t i = 0; i < triggers.size(); ++i) {
    const Timestamp t0 = triggers[i];
    const Timestamp t1 = t0 + window;
    EdgeEvent ev{i, t0, kNaN, kNaN, detector, false, false};

    while (r < rises.size() && rises[r] < t0) ++r;
    bool rise_in_window = r < rises.size() && rises[r] <= t1;
    if (rise_in_window) {
      const Timestamp rise = rises[r];
      while (f < falls.size() && (falls[f] <= rise || fall_used[f])) ++f;
      if (f < falls.size() && falls[f] <= t1) {
        ev.has_detection = true;
        ev.rise_delay_ps = ticks_to_ps(rise - t0);
        ev.fall_delay_ps = ticks_to_ps(falls[f] - t0);
        fall_used[f] = 1;
        ++r;
        ++f;
      }
    }
    if (!ev.has_detection) {
      while (f_scan < falls.size() && falls[f_scan] < t0) ++f_scan;
      bool fall_in_window = false;
      for (std::size_t j = f_scan; j < falls.size() && falls[j] <= t1; ++j) {
        if (!fall_used[j]) {
          fall_in_window = true;
          break;
        }
      }
      ev.malformed = rise_in_window || fall_in_window;
    }

    auto& d = result.diagnostics;
    ++d.triggers;
    if (ev.has_detection) {
      ++d.detections;
    } else {
      ++d.zero_events;
      if (ev.malformed) ++d.malformed_events;
    }
    result.events.push_back(ev);
  }
  result.diagnostics.orphan_edges =
      rises.size() + falls.size() - 2 * result.diagnostics.detections;
  return result;
}

std::vector<EdgeEvent> detected_only(std::span<const EdgeEvent> events) {
  std::vector<EdgeEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (e.has_detection) out.push_back(e);
  }
  return out;
}

}  // namespace pnr
