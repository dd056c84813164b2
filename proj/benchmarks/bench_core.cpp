#include <benchmark/benchmark.h>

#include <numbers>
#include <random>
#include <sstream>

#include "pnr/calib.hpp"
#include "pnr/detector_sim.hpp"
#include "pnr/pairing.hpp"
#include "pnr/timetag.hpp"
#include "pnr/voigt.hpp"

using namespace pnr;

namespace {

const SimulatedStream& sample_stream() {
  static const SimulatedStream s = [] {
    const auto d = default_params();
    return simulate_stream(d.source, d.pulse, d.jitter, 100'000, 1);
  }();
  return s;
}

const std::vector<double>& sample_coords() {
  static const std::vector<double> c = [] {
    const auto events = detected_only(pair_edges(sample_stream().tags, kDefaultPairingWindowPs, Detector::A).events);
    return project(events, 0.75 * std::numbers::pi);
  }();
  return c;
}

}  // namespace

static void BM_VoigtBatch(benchmark::State& state) {
  std::vector<double> dx(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = -50.0 + 100.0 * static_cast<double>(i) / dx.size();
  std::vector<double> out(dx.size());
  for (auto _ : state) {
    voigt_profile_batch(dx, 3.0, 0.7, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VoigtBatch)->Arg(256)->Arg(4096);

static void BM_ReadStream(benchmark::State& state) {
  std::ostringstream os(std::ios::binary);
  write_stream(sample_stream().tags, os);
  const std::string bytes = os.str();
  for (auto _ : state) {
    std::istringstream is(bytes, std::ios::binary);
    TagReader r(is);
    std::uint64_t n = 0;
    while (r.next()) ++n;
    benchmark::DoNotOptimize(n);
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ReadStream);

static void BM_PairEdges(benchmark::State& state) {
  const auto& tags = sample_stream().tags;
  for (auto _ : state) {
    auto r = pair_edges(tags, kDefaultPairingWindowPs, Detector::A);
    benchmark::DoNotOptimize(r.events.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tags.size()));
}
BENCHMARK(BM_PairEdges);

static void BM_SimulateStream(benchmark::State& state) {
  const auto d = default_params();
  for (auto _ : state) {
    auto s = simulate_stream(d.source, d.pulse, d.jitter, 100'000, 2);
    benchmark::DoNotOptimize(s.tags.data());
  }
}
BENCHMARK(BM_SimulateStream)->Unit(benchmark::kMillisecond);

static void BM_FitMixture(benchmark::State& state) {
  const auto& coords = sample_coords();
  const auto peaks = find_peaks(build_histogram_1d(coords, 0.5), 3.0, 0.02);
  MixtureFitOptions o;
  o.shared_shape = true;
  for (auto _ : state) {
    auto fit = fit_mixture(coords, static_cast<int>(peaks.size()), peaks, o);
    benchmark::DoNotOptimize(fit.components.data());
  }
}
BENCHMARK(BM_FitMixture)->Unit(benchmark::kMillisecond);

static void BM_CrosstalkMatrix(benchmark::State& state) {
  std::vector<VoigtComponent> comps;
  for (int i = 0; i < 6; ++i) comps.push_back({30.0 * i, 4.0, 0.5, 1.0 / 6.0});
  const auto b = optimize_boundaries(comps);
  for (auto _ : state) {
    auto m = crosstalk_matrix(comps, b);
    benchmark::DoNotOptimize(m.data());
  }
}
BENCHMARK(BM_CrosstalkMatrix)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
