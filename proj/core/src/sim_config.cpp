#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "pnr/detector_sim.hpp"

namespace pnr {

using detail::json;

SimulationConfig parse_simulation_config(const std::string& json_text) {
  const json root = detail::parse_json(json_text, "simulation config");
  detail::reject_unknown_keys(root, {"n_triggers", "seed", "source", "pulse", "jitter"}, "config");

  SimulationConfig c;
  detail::read_opt(root, "n_triggers", c.n_triggers, "config");
  detail::read_opt(root, "seed", c.seed, "config");

  if (root.contains("source")) {
    const json& s = root["source"];
    detail::reject_unknown_keys(s,
                                {"kind", "mu", "pair_prob", "multi_pair", "visibility",
                                 "repetition_rate_hz", "efficiency_a", "efficiency_b",
                                 "trigger_jitter_ps", "dark_count_rate_hz"},
                                "source");
    std::string kind = to_string(c.source.kind);
    detail::read_opt(s, "kind", kind, "source");
    try {
      c.source.kind = parse_source_kind(kind);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("source.kind: ") + e.what());
    }
    detail::read_opt(s, "mu", c.source.mu, "source");
    detail::read_opt(s, "pair_prob", c.source.pair_prob, "source");
    detail::read_opt(s, "multi_pair", c.source.multi_pair, "source");
    detail::read_opt(s, "visibility", c.source.visibility, "source");
    detail::read_opt(s, "repetition_rate_hz", c.source.repetition_rate_hz, "source");
    detail::read_opt(s, "efficiency_a", c.source.efficiency_a, "source");
    detail::read_opt(s, "efficiency_b", c.source.efficiency_b, "source");
    detail::read_opt(s, "trigger_jitter_ps", c.source.trigger_jitter_ps, "source");
    detail::read_opt(s, "dark_count_rate_hz", c.source.dark_count_rate_hz, "source");
  }
  if (root.contains("pulse")) {
    const json& p = root["pulse"];
    detail::reject_unknown_keys(p,
                                {"kinetic_inductance_time_ns", "hotspot_rise_scale_ps",
                                 "amplitude_1", "saturation", "threshold", "max_photons",
                                 "latency_ps"},
                                "pulse");
    detail::read_opt(p, "kinetic_inductance_time_ns", c.pulse.kinetic_inductance_time_ns, "pulse");
    detail::read_opt(p, "hotspot_rise_scale_ps", c.pulse.hotspot_rise_scale_ps, "pulse");
    detail::read_opt(p, "amplitude_1", c.pulse.amplitude_1, "pulse");
    detail::read_opt(p, "saturation", c.pulse.saturation, "pulse");
    detail::read_opt(p, "threshold", c.pulse.threshold, "pulse");
    detail::read_opt(p, "max_photons", c.pulse.max_photons, "pulse");
    detail::read_opt(p, "latency_ps", c.pulse.latency_ps, "pulse");
  }
  if (root.contains("jitter")) {
    const json& j = root["jitter"];
    detail::reject_unknown_keys(j, {"detector_rms_ps", "tagger_rms_ps", "detector_b_rms_ps"},
                                "jitter");
    detail::read_opt(j, "detector_rms_ps", c.jitter.detector_rms_ps, "jitter");
    detail::read_opt(j, "tagger_rms_ps", c.jitter.tagger_rms_ps, "jitter");
    detail::read_opt(j, "detector_b_rms_ps", c.jitter.detector_b_rms_ps, "jitter");
  }
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid simulation parameters: ") + e.what());
  }
  return c;
}

std::string to_json(const SimulationConfig& c) {
  json root;
  root["n_triggers"] = c.n_triggers;
  root["seed"] = c.seed;
  root["source"] = {{"kind", to_string(c.source.kind)},
                    {"mu", c.source.mu},
                    {"pair_prob", c.source.pair_prob},
                    {"multi_pair", c.source.multi_pair},
                    {"visibility", c.source.visibility},
                    {"repetition_rate_hz", c.source.repetition_rate_hz},
                    {"efficiency_a", c.source.efficiency_a},
                    {"efficiency_b", c.source.efficiency_b},
                    {"trigger_jitter_ps", c.source.trigger_jitter_ps},
                    {"dark_count_rate_hz", c.source.dark_count_rate_hz}};
  root["pulse"] = {{"kinetic_inductance_time_ns", c.pulse.kinetic_inductance_time_ns},
                   {"hotspot_rise_scale_ps", c.pulse.hotspot_rise_scale_ps},
                   {"amplitude_1", c.pulse.amplitude_1},
                   {"saturation", c.pulse.saturation},
                   {"threshold", c.pulse.threshold},
                   {"max_photons", c.pulse.max_photons},
                   {"latency_ps", c.pulse.latency_ps}};
  root["jitter"] = {{"detector_rms_ps", c.jitter.detector_rms_ps},
                    {"tagger_rms_ps", c.jitter.tagger_rms_ps},
                    {"detector_b_rms_ps", c.jitter.detector_b_rms_ps}};
  return root.dump(2);
}

void write_truth_csv(const std::string& path, const std::vector<TruthRecord>& truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "trigger_index,true_n_a,true_n_b\n";
  for (const auto& t : truth) out << t.trigger_index << ',' << t.true_n_a << ',' << t.true_n_b << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<TruthRecord> read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line.rfind("trigger_index", 0) != 0) {
    throw FormatError("truth file '" + path + "' lacks the trigger_index header");
  }
  std::vector<TruthRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TruthRecord t;
    char c1 = 0, c2 = 0;
    if (!(row >> t.trigger_index >> c1 >> t.true_n_a >> c2 >> t.true_n_b) || c1 != ',' || c2 != ',') {
      throw FormatError("malformed truth row: " + line);
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace pnr
