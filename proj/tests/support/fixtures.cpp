#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

namespace pnr::fixture {

SimulationConfig coherent(double detected_mean, std::uint64_t triggers, std::uint64_t seed) {
  SimulationConfig c;
  c.source.kind = SourceKind::Coherent;
  c.source.mu = detected_mean / c.source.efficiency_a;
  c.n_triggers = triggers;
  c.seed = seed;
  return c;
}

SimulationConfig pairs(SourceKind kind, double pair_prob, double efficiency, std::uint64_t triggers,
                       std::uint64_t seed) {
  SimulationConfig c;
  c.source.kind = kind;
  c.source.pair_prob = pair_prob;
  c.source.efficiency_a = c.source.efficiency_b = efficiency;
  c.n_triggers = triggers;
  c.seed = seed;
  return c;
}

SimulatedStream run(const SimulationConfig& c) {
  return simulate_stream(c.source, c.pulse, c.jitter, c.n_triggers, c.seed);
}

std::vector<PhotonRecord> records_from_truth(std::span<const TruthRecord> truth, Detector d) {
  std::vector<PhotonRecord> out;
  out.reserve(truth.size());
  for (const auto& t : truth) {
    PhotonRecord r;
    r.trigger_index = t.trigger_index;
    r.detector = d;
    r.n = static_cast<int>(d == Detector::A ? t.true_n_a : t.true_n_b);
    out.push_back(r);
  }
  return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("pnr_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace pnr::fixture
