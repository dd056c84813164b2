#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pnr/decode.hpp"
#include "pnr/detector_sim.hpp"

namespace pnr::fixture {

/// Coherent source on detector A whose post-loss mean is `detected_mean`.
SimulationConfig coherent(double detected_mean, std::uint64_t triggers, std::uint64_t seed);

/// Pair source (split or N00N) feeding both detectors.
SimulationConfig pairs(SourceKind kind, double pair_prob, double efficiency, std::uint64_t triggers,
                       std::uint64_t seed);

SimulatedStream run(const SimulationConfig& c);

/// Records carrying the true photon numbers, as a perfect decoder would.
std::vector<PhotonRecord> records_from_truth(std::span<const TruthRecord> truth, Detector d);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_bytes(const std::filesystem::path& p);

}  // namespace pnr::fixture
