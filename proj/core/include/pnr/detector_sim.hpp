#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnr/timetag.hpp"

namespace pnr {

/// Threshold-crossing pulse model
///
///   v_n(t) = A_n * (1 - exp(-n t / tau_1)) * exp(-t / tau_fall)
///   A_n    = amplitude_1 * (1 - s^n) / (1 - s)      (A_n = n * amplitude_1 at s = 1)
///
/// More absorbed photons give a faster rise (earlier upward crossing) and a
/// larger compressed amplitude (later downward crossing). The constants are
/// fit parameters chosen for separability, not measured device values.
struct PulseModelParams {
  double kinetic_inductance_time_ns = 0.4;  ///< tau_fall = L_k / R_load
  double hotspot_rise_scale_ps = 150.0;     ///< tau_1, single-photon rise constant
  double amplitude_1 = 1.0;
  double saturation = 0.6;                  ///< in (0, 1]
  double threshold = 0.3;                   ///< in (0, amplitude_1)
  int max_photons = 6;                      ///< higher photon numbers pulse like max_photons
  /// Constant delay between optical arrival and pulse onset, added to both
  /// edges by the simulator so jittered edges stay after the trigger.
  double latency_ps = 100.0;

  /// Throws DomainError (bad ranges) or UndetectablePhotonNumberError.
  void validate() const;
  double amplitude(int n) const;
  double fall_time_ps() const { return kinetic_inductance_time_ns * 1000.0; }
};

struct JitterParams {
  double detector_rms_ps = 8.1;
  double tagger_rms_ps = 1.3;  ///< per channel, independent per edge
  double detector_b_rms_ps = 9.2;

  void validate() const;
  double detector_rms(Detector d) const { return d == Detector::A ? detector_rms_ps : detector_b_rms_ps; }
};

enum class SourceKind { Coherent, SpdcPairs, Noon2 };
const char* to_string(SourceKind k);
SourceKind parse_source_kind(const std::string& s);

struct SourceSpec {
  SourceKind kind = SourceKind::Coherent;
  /// Mean photon number before loss (coherent source only; feeds detector A).
  double mu = 3.43 / 0.86;
  /// Pair emission probability per trigger (pair sources). With multi_pair
  /// the pair number is Poisson with this mean instead of Bernoulli.
  double pair_prob = 0.1;
  bool multi_pair = false;
  double visibility = 1.0;  ///< N00N two-photon interference visibility
  double repetition_rate_hz = 100e3;
  double efficiency_a = 0.86;
  double efficiency_b = 0.91;
  double trigger_jitter_ps = 0.0;
  double dark_count_rate_hz = 0.0;  ///< per detector, uniform in time

  void validate() const;
};

struct TruthRecord {
  std::uint64_t trigger_index = 0;
  std::uint32_t true_n_a = 0;
  std::uint32_t true_n_b = 0;

  friend bool operator==(const TruthRecord&, const TruthRecord&) = default;
};

struct EdgeDelays {
  double rise_ps = 0.0;
  double fall_ps = 0.0;
};

/// Noiseless first upward and last downward threshold crossings of v_n,
/// measured from pulse onset. Requires 1 <= n <= max_photons.
EdgeDelays edge_delays(int n, const PulseModelParams& p);

/// Per-trigger post-loss photon numbers. Deterministic for a fixed seed and
/// identical to the truth emitted by simulate_stream with the same seed.
std::vector<TruthRecord> sample_source(const SourceSpec& spec, std::uint64_t n_triggers,
                                       std::uint64_t seed);

struct SimulatedStream {
  std::vector<TimeTag> tags;
  std::vector<TruthRecord> truth;
};

/// Full time-tag stream. Work is split into fixed trigger blocks with
/// per-block derived seeds, so the output does not depend on worker count.
SimulatedStream simulate_stream(const SourceSpec& spec, const PulseModelParams& pulse,
                                const JitterParams& jitter, std::uint64_t n_triggers,
                                std::uint64_t seed);

struct DefaultParams {
  PulseModelParams pulse;
  JitterParams jitter;
  SourceSpec source;
};

/// Defaults: 100 kHz, efficiency 0.86, jitter (8.1, 1.3, 9.2) ps,
/// max_photons 6, coherent source with detected mean 3.43.
DefaultParams default_params();

/// Everything needed for one simulate run.
struct SimulationConfig {
  SourceSpec source;
  PulseModelParams pulse;
  JitterParams jitter;
  std::uint64_t n_triggers = 100'000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Strict JSON parsing: unknown keys raise ConfigError.
SimulationConfig parse_simulation_config(const std::string& json_text);
std::string to_json(const SimulationConfig& config);

void write_truth_csv(const std::string& path, const std::vector<TruthRecord>& truth);
std::vector<TruthRecord> read_truth_csv(const std::string& path);

}  // namespace pnr
