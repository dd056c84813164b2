#include "pnr/detector_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pnr/errors.hpp"
#include "pnr/parallel.hpp"

namespace pnr {

namespace {

constexpr std::uint64_t kBlockTriggers = 1 << 14;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator per (seed, block, purpose).
std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block, std::uint64_t stream) {
  const std::uint64_t s = splitmix64(splitmix64(seed) ^ splitmix64(block * 4 + stream + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::uint32_t thin(std::uint32_t n, double efficiency, std::mt19937_64& rng) {
  if (n == 0 || efficiency <= 0.0) return 0;
  if (efficiency >= 1.0) return n;
  return static_cast<std::uint32_t>(std::binomial_distribution<std::uint32_t>(n, efficiency)(rng));
}

std::uint32_t draw_poisson(double mean, std::mt19937_64& rng) {
  if (mean <= 0.0) return 0;
  return static_cast<std::uint32_t>(std::poisson_distribution<std::uint32_t>(mean)(rng));
}

std::uint32_t draw_pairs(const SourceSpec& s, std::mt19937_64& rng) {
  if (s.multi_pair) return draw_poisson(s.pair_prob, rng);
  return std::bernoulli_distribution(s.pair_prob)(rng) ? 1u : 0u;
}

TruthRecord sample_one(const SourceSpec& s, std::uint64_t index, std::mt19937_64& rng) {
  std::uint32_t a = 0, b = 0;
  switch (s.kind) {
    case SourceKind::Coherent:
      a = draw_poisson(s.mu, rng);
      break;
    case SourceKind::SpdcPairs: {
      const auto pairs = draw_pairs(s, rng);
      a = pairs;
      b = pairs;
      break;
    }
    case SourceKind::Noon2: {
      const auto pairs = draw_pairs(s, rng);
      const double p_bunched = (1.0 + s.visibility) / 4.0;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::uint32_t k = 0; k < pairs; ++k) {
        const double x = u(rng);
        if (x < p_bunched) {
          a += 2;
        } else if (x < 2.0 * p_bunched) {
          b += 2;
        } else {
          ++a;
          ++b;
        }
      }
      break;
    }
  }
  return {index, thin(a, s.efficiency_a, rng), thin(b, s.efficiency_b, rng)};
}

void check(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

double pulse_value(double t, int n, const PulseModelParams& p, double amp) {
  const double tau_r = p.hotspot_rise_scale_ps / n;
  return amp * (-std::expm1(-t / tau_r)) * std::exp(-t / p.fall_time_ps());
}

}  // namespace

const char* to_string(SourceKind k) {
  switch (k) {
    case SourceKind::Coherent: return "coherent";
    case SourceKind::SpdcPairs: return "spdc_pairs";
    case SourceKind::Noon2: return "noon2";
  }
  return "?";
}

SourceKind parse_source_kind(const std::string& s) {
  if (s == "coherent") return SourceKind::Coherent;
  if (s == "spdc_pairs") return SourceKind::SpdcPairs;
  if (s == "noon2") return SourceKind::Noon2;
  throw DomainError("unknown source kind '" + s + "'");
}

double PulseModelParams::amplitude(int n) const {
  if (saturation >= 1.0) return amplitude_1 * n;
  return amplitude_1 * (1.0 - std::pow(saturation, n)) / (1.0 - saturation);
}

void PulseModelParams::validate() const {
  check(kinetic_inductance_time_ns > 0.0, "kinetic_inductance_time must be > 0");
  check(hotspot_rise_scale_ps > 0.0, "hotspot_rise_scale must be > 0");
  check(amplitude_1 > 0.0, "amplitude_1 must be > 0");
  check(saturation > 0.0 && saturation <= 1.0, "saturation must lie in (0, 1]");
  check(threshold > 0.0 && threshold < amplitude_1, "threshold must lie in (0, amplitude_1)");
  check(max_photons >= 1, "max_photons must be >= 1");
  check(latency_ps >= 0.0 && std::isfinite(latency_ps), "latency must be >= 0");
  for (int n = 1; n <= max_photons; ++n) edge_delays(n, *this);
}

void JitterParams::validate() const {
  check(detector_rms_ps >= 0.0 && tagger_rms_ps >= 0.0 && detector_b_rms_ps >= 0.0,
        "jitter values must be >= 0");
}

void SourceSpec::validate() const {
  check(mu >= 0.0 && std::isfinite(mu), "mu must be >= 0");
  check(pair_prob >= 0.0 && pair_prob <= (multi_pair ? 1e6 : 1.0), "pair_prob out of range");
  check(visibility >= 0.0 && visibility <= 1.0, "visibility must lie in [0, 1]");
  check(repetition_rate_hz > 0.0, "repetition_rate must be > 0");
  check(efficiency_a >= 0.0 && efficiency_a <= 1.0, "efficiency_a must lie in [0, 1]");
  check(efficiency_b >= 0.0 && efficiency_b <= 1.0, "efficiency_b must lie in [0, 1]");
  check(trigger_jitter_ps >= 0.0, "trigger_jitter must be >= 0");
  check(dark_count_rate_hz >= 0.0, "dark_count_rate must be >= 0");
}

void SimulationConfig::validate() const {
  source.validate();
  pulse.validate();
  jitter.validate();
  check(n_triggers >= 1, "n_triggers must be >= 1");
}

EdgeDelays edge_delays(int n, const PulseModelParams& p) {
  if (n < 1 || n > p.max_photons) {
    throw DomainError("photon number " + std::to_string(n) + " outside [1, max_photons]");
  }
  const double amp = p.amplitude(n);
  auto g = [&](double t) { return pulse_value(t, n, p, amp) - p.threshold; };

  // Bracket by a uniform scan well past the decay, then bisect each bracket.
  const double tau_r = p.hotspot_rise_scale_ps / n;
  const double step = std::min(tau_r, p.fall_time_ps()) / 64.0;
  const double horizon = 60.0 * p.fall_time_ps() + 60.0 * tau_r;
  double first_lo = -1.0, last_lo = -1.0;
  double prev_t = 0.0, prev_g = g(0.0);
  for (double t = step; t <= horizon; t += step) {
    const double gt = g(t);
    if (prev_g <= 0.0 && gt > 0.0 && first_lo < 0.0) first_lo = prev_t;
    if (prev_g > 0.0 && gt <= 0.0) last_lo = prev_t;
    prev_t = t;
    prev_g = gt;
  }
  if (first_lo < 0.0 || last_lo < 0.0) {
    throw UndetectablePhotonNumberError("pulse for n=" + std::to_string(n) +
                                        " never crosses the threshold");
  }
  auto bisect = [&](double lo, double hi, bool rising) {
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool above = g(mid) > 0.0;
      if (above == rising) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  return {bisect(first_lo, first_lo + step, true), bisect(last_lo, last_lo + step, false)};
}

std::vector<TruthRecord> sample_source(const SourceSpec& spec, std::uint64_t n_triggers,
                                       std::uint64_t seed) {
  spec.validate();
  std::vector<TruthRecord> out(n_triggers);
  const std::uint64_t blocks = (n_triggers + kBlockTriggers - 1) / kBlockTriggers;
  parallel_for(blocks, [&](std::size_t b) {
    auto rng = block_rng(seed, b, 0);
    const std::uint64_t end = std::min<std::uint64_t>(n_triggers, (b + 1) * kBlockTriggers);
    for (std::uint64_t i = b * kBlockTriggers; i < end; ++i) out[i] = sample_one(spec, i, rng);
  });
  return out;
}

SimulatedStream simulate_stream(const SourceSpec& spec, const PulseModelParams& pulse,
                                const JitterParams& jitter, std::uint64_t n_triggers,
                                std::uint64_t seed) {
  spec.validate();
  pulse.validate();
  jitter.validate();

  std::vector<EdgeDelays> delays(pulse.max_photons + 1);
  for (int n = 1; n <= pulse.max_photons; ++n) delays[n] = edge_delays(n, pulse);

  SimulatedStream out;
  out.truth = sample_source(spec, n_triggers, seed);

  const double period_ticks = 1e12 / spec.repetition_rate_hz * kTicksPerPs;
  const std::uint64_t blocks = (n_triggers + kBlockTriggers - 1) / kBlockTriggers;
  std::vector<std::vector<TimeTag>> block_tags(blocks);

  parallel_for(blocks, [&](std::size_t b) {
    auto rng = block_rng(seed, b, 1);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto& tags = block_tags[b];
    const std::uint64_t begin = b * kBlockTriggers;
    const std::uint64_t end = std::min<std::uint64_t>(n_triggers, begin + kBlockTriggers);

    auto emit_pulse = [&](double onset_ps, int n, Detector d) {
      const auto& e = delays[std::min(n, pulse.max_photons)];
      const double shared = jitter.detector_rms(d) * unit(rng);
      const double rise = onset_ps + e.rise_ps + shared + jitter.tagger_rms_ps * unit(rng);
      const double fall = onset_ps + e.fall_ps + shared + jitter.tagger_rms_ps * unit(rng);
      tags.push_back({rising_channel(d), ps_to_ticks(rise)});
      tags.push_back({falling_channel(d), ps_to_ticks(fall)});
    };

    for (std::uint64_t i = begin; i < end; ++i) {
      const double t_ps = static_cast<double>(i) * period_ticks / kTicksPerPs;
      const double trig_ps = t_ps + spec.trigger_jitter_ps * unit(rng);
      tags.push_back({channel::kTrigger, ps_to_ticks(trig_ps)});
      const auto& truth = out.truth[i];
      if (truth.true_n_a > 0) emit_pulse(t_ps + pulse.latency_ps, static_cast<int>(truth.true_n_a), Detector::A);
      if (truth.true_n_b > 0) emit_pulse(t_ps + pulse.latency_ps, static_cast<int>(truth.true_n_b), Detector::B);
    }

    if (spec.dark_count_rate_hz > 0.0) {
      const double block_start_ps = static_cast<double>(begin) * period_ticks / kTicksPerPs;
      const double block_len_ps = static_cast<double>(end - begin) * period_ticks / kTicksPerPs;
      std::uniform_real_distribution<double> when(0.0, block_len_ps);
      for (Detector d : {Detector::A, Detector::B}) {
        const auto count = draw_poisson(spec.dark_count_rate_hz * block_len_ps * 1e-12, rng);
        for (std::uint32_t k = 0; k < count; ++k) emit_pulse(block_start_ps + when(rng), 1, d);
      }
    }
    std::sort(tags.begin(), tags.end(), tag_less);
  });

  std::size_t total = 0;
  for (const auto& bt : block_tags) total += bt.size();
  out.tags.reserve(total);
  for (auto& bt : block_tags) {
    out.tags.insert(out.tags.end(), bt.begin(), bt.end());
    std::vector<TimeTag>().swap(bt);
  }
  // Edges near a block end can in principle spill past the next trigger block.
  if (!std::is_sorted(out.tags.begin(), out.tags.end(), tag_less)) {
    std::stable_sort(out.tags.begin(), out.tags.end(), tag_less);
  }
  return out;
}

DefaultParams default_params() { return DefaultParams{}; }

}  // namespace pnr
