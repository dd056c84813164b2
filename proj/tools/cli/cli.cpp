#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pnr/calib.hpp"
#include "pnr/decode.hpp"
#include "pnr/detector_sim.hpp"
#include "pnr/errors.hpp"
#include "pnr/pairing.hpp"
#include "pnr/photostat.hpp"
#include "pnr/timetag.hpp"
#include "run_config.hpp"

namespace pnr::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class Command { Simulate, Calibrate, Decode, Stats, Jpnd };

const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Calibrate: return "calibrate";
    case Command::Decode: return "decode";
    case Command::Stats: return "stats";
    case Command::Jpnd: return "jpnd";
  }
  return "?";
}

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string mode;
  std::optional<double> window_ps;
  bool quiet = false;
};

struct Inputs {
  std::uint64_t triggers = 0;  // 0 = from config
  std::string detector;
  std::string stream;
  std::string calibration;
  std::string truth;
  std::string records;
  std::string records_a, records_b;
  std::string split_a, split_b;
};

/// Command outcome: a summary for stdout. Files are written as side effects.
using Summary = json;

int exit_code_for(const Error& e, Command cmd) {
  const std::string kind = e.kind();
  if (kind == "config" || kind == "domain" || kind == "undetectable_photon_number") return kUsage;
  if (kind == "io" || kind == "format" || kind == "truncation" || kind == "ordering" || kind == "data") return kIo;
  if (kind == "compatibility" || kind == "alignment") return kCompatibility;
  // Any fit-side failure of the calibrate command is a calibration failure,
  // including an empty or too small sample.
  if (cmd == Command::Calibrate) return kCalibration;
  if (kind == "calibration" || kind == "fit" || kind == "degenerate_overlap") return kCalibration;
  return kInsufficientData;
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) {
    std::error_code ec;
    root_ = fs::absolute(dir, ec).lexically_normal();
    if (ec) throw IoError("cannot resolve output directory '" + dir + "'");
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_)) throw IoError("cannot create output directory '" + dir + "'");
  }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream f(path(name), std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path(name) + "' for writing");
    f << text << '\n';
    if (!f) throw IoError("failed writing '" + path(name) + "'");
  }

 private:
  fs::path root_;
};

std::string resolve_input(const std::string& p) {
  if (p.empty()) return p;
  std::error_code ec;
  auto abs = fs::absolute(p, ec).lexically_normal();
  if (ec) throw IoError("cannot resolve path '" + p + "'");
  if (!fs::exists(abs)) throw IoError("input '" + p + "' does not exist");
  return abs.string();
}

std::string lower_detector(Detector d) { return d == Detector::A ? "a" : "b"; }

// ---------------------------------------------------------------------------

Summary cmd_simulate(const GlobalFlags& g, const Inputs& in, RunConfig cfg) {
  auto& sim = cfg.simulate;
  if (g.seed) sim.seed = *g.seed;
  if (in.triggers > 0) sim.n_triggers = in.triggers;
  sim.validate();
  const OutputDir out(g.out_dir);

  const auto stream = simulate_stream(sim.source, sim.pulse, sim.jitter, sim.n_triggers, sim.seed);
  StreamHeader header;
  header.epoch_note = "simulated seed=" + std::to_string(sim.seed);
  write_stream_file(out.path("stream.pnrtag"), stream.tags, header);
  write_truth_csv(out.path("truth.csv"), stream.truth);
  out.write_text("simulate_config.json", to_json(sim));

  std::uint64_t sum_a = 0, sum_b = 0, hit_a = 0, hit_b = 0;
  for (const auto& t : stream.truth) {
    sum_a += t.true_n_a;
    sum_b += t.true_n_b;
    hit_a += t.true_n_a > 0;
    hit_b += t.true_n_b > 0;
  }
  std::uint64_t rising_a = 0, rising_b = 0;
  for (const auto& t : stream.tags) {
    rising_a += t.channel == channel::kRiseA;
    rising_b += t.channel == channel::kRiseB;
  }
  const double n = sim.n_triggers > 0 ? static_cast<double>(sim.n_triggers) : 1.0;
  Summary s{{"command", "simulate"},
            {"triggers", sim.n_triggers},
            {"seed", sim.seed},
            {"tags", stream.tags.size()},
            {"source", to_string(sim.source.kind)},
            {"detected_mean_a", static_cast<double>(sum_a) / n},
            {"detected_mean_b", static_cast<double>(sum_b) / n},
            {"detections_a", hit_a},
            {"detections_b", hit_b},
            {"rising_edges_a", rising_a},
            {"rising_edges_b", rising_b},
            {"stream", out.path("stream.pnrtag")},
            {"truth", out.path("truth.csv")}};
  out.write_text("simulate_summary.json", s.dump(2));
  return s;
}

std::vector<TimeTag> load_stream_checked(const std::string& path) {
  std::error_code ec;
  if (fs::file_size(path, ec) == 0 && !ec) throw EmptySampleError("tag file '" + path + "' is empty");
  return read_stream_file(path);
}

void require_channels(std::span<const TimeTag> tags, Detector d) {
  if (!has_trigger_channel(tags)) throw CompatibilityError("stream has no trigger tags (channel 0)");
  bool own = false, other = false;
  for (const auto& t : tags) {
    if (t.channel == rising_channel(d) || t.channel == falling_channel(d)) own = true;
    else if (t.channel != channel::kTrigger) other = true;
    if (own) break;
  }
  if (!own && other) {
    throw CompatibilityError(std::string("stream has edges for the other detector but none for detector ") +
                             to_string(d));
  }
}

Summary cmd_calibrate(const GlobalFlags& g, const Inputs& in, RunConfig cfg) {
  auto& c = cfg.calibrate;
  if (!in.detector.empty()) c.detector = parse_detector(in.detector);
  if (g.window_ps) c.window_ps = *g.window_ps;
  if (!(c.window_ps > 0)) throw ConfigError("--window must be > 0");
  const auto stream_path = resolve_input(in.stream);
  const OutputDir out(g.out_dir);

  const auto tags = load_stream_checked(stream_path);
  if (tags.empty()) throw EmptySampleError("tag file holds no records");
  require_channels(tags, c.detector);
  const auto paired = pair_edges(tags, c.window_ps, c.detector);
  const auto detected = detected_only(paired.events);
  if (detected.empty()) throw EmptySampleError("no detections to calibrate on");

  const auto result = calibrate(paired.events, c.options);
  const std::string d = lower_detector(c.detector);
  out.write_text("calibration_" + d + ".json", calibration_file_json(result));
  build_histogram(detected, c.options.rise_bin_ps, c.options.fall_bin_ps)
      .write_csv(out.path("histogram2d_" + d + ".csv"));
  write_projection_csv(out.path("projection_optimal_" + d + ".csv"), detected, result.optimal,
                       c.options.projection_bin_ps);
  write_projection_csv(out.path("projection_rising_only_" + d + ".csv"), detected, result.rising_only,
                       c.options.projection_bin_ps);
  write_matrix_csv(out.path("crosstalk_optimal_" + d + ".csv"), result.optimal.crosstalk);
  write_matrix_csv(out.path("crosstalk_rising_only_" + d + ".csv"), result.rising_only.crosstalk);

  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  return Summary{{"command", "calibrate"},
                 {"detector", to_string(c.detector)},
                 {"triggers", paired.diagnostics.triggers},
                 {"detections", paired.diagnostics.detections},
                 {"peak_count", result.peak_count},
                 {"optimal_angle_deg", result.optimal.angle * kDeg},
                 {"crosstalk_optimal", off_diagonal_mass(result.optimal.crosstalk)},
                 {"crosstalk_rising_only", off_diagonal_mass(result.rising_only.crosstalk)},
                 {"reduced_chi_square", result.optimal.reduced_chi_square},
                 {"pairing", json::parse(paired.diagnostics.to_json())},
                 {"calibration", out.path("calibration_" + d + ".json")}};
}

Summary cmd_decode(const GlobalFlags& g, const Inputs& in, RunConfig cfg) {
  auto& c = cfg.decode;
  if (!g.mode.empty()) c.mode = parse_calibration_mode(g.mode);
  if (g.window_ps) c.window_ps = *g.window_ps;
  if (!(c.window_ps > 0)) throw ConfigError("--window must be > 0");
  const auto stream_path = resolve_input(in.stream);
  const auto calib_path = resolve_input(in.calibration);
  const auto truth_path = resolve_input(in.truth);
  const OutputDir out(g.out_dir);

  const auto model = load_calibration(calib_path, c.mode);
  const auto tags = read_stream_file(stream_path);
  require_channels(tags, model.detector);
  const auto paired = pair_edges(tags, c.window_ps, model.detector);
  DecodeDiagnostics diag;
  const auto records = decode_events(paired.events, model, &diag);

  const std::string d = lower_detector(model.detector);
  write_records_csv(out.path("records_" + d + ".csv"), records);
  write_records_binary(out.path("records_" + d + ".pnrrec"), records);
  json diagnostics = json::parse(diag.to_json());
  diagnostics["mode"] = pnr::to_string(c.mode);
  diagnostics["detector"] = pnr::to_string(model.detector);
  diagnostics["pairing"] = json::parse(paired.diagnostics.to_json());

  Summary s{{"command", "decode"},
            {"detector", pnr::to_string(model.detector)},
            {"mode", pnr::to_string(c.mode)},
            {"records", out.path("records_" + d + ".csv")},
            {"diagnostics", diagnostics}};
  if (!truth_path.empty()) {
    const auto truth = read_truth_csv(truth_path);
    const auto report = confusion_report(records, truth, model, c.compare_up_to);
    out.write_text("confusion_" + d + ".json", report.to_json());
    report.write_csv(out.path("confusion_" + d + ".csv"));
    s["confusion"] = {{"max_abs_z", report.max_abs_z}, {"consistent", report.consistent()}};
    diagnostics["confusion_max_abs_z"] = report.max_abs_z;
  }
  out.write_text("diagnostics_" + d + ".json", diagnostics.dump(2));
  return s;
}

Summary cmd_stats(const GlobalFlags& g, const Inputs& in, RunConfig cfg) {
  const auto& c = cfg.stats;
  const auto path = resolve_input(in.records);
  const OutputDir out(g.out_dir);
  const auto records = read_records(path);
  const auto dist = number_distribution(records, c.n_max, true);
  const auto fit = fit_poisson_mu(dist, c.top_category);

  json report{{"command", "stats"},
              {"records", path},
              {"distribution", {{"counts", dist.counts}, {"total", dist.total()}, {"mean", dist.mean()}}},
              {"poisson_fit", json::parse(fit.to_json())}};
  out.write_text("stats.json", report.dump(2));
  write_distribution_csv(out.path("distribution.csv"), dist, &fit);
  return Summary{{"command", "stats"},
                 {"total", dist.total()},
                 {"mu", fit.mu},
                 {"ci95", {fit.ci_low, fit.ci_high}},
                 {"reduced_chi_square", fit.reduced_chi_square},
                 {"report", out.path("stats.json")}};
}

json two_photon_bars(const JointDistribution& j) {
  return {{"n20", j.at(2, 0)}, {"n11", j.at(1, 1)}, {"n02", j.at(0, 2)}};
}

Summary cmd_jpnd(const GlobalFlags& g, const Inputs& in, RunConfig cfg) {
  auto& c = cfg.jpnd;
  if (g.window_ps) c.window_ps = *g.window_ps;
  if (in.split_a.empty() != in.split_b.empty()) throw ConfigError("--split-a and --split-b go together");
  const auto pa = resolve_input(in.records_a);
  const auto pb = resolve_input(in.records_b);
  const auto sa = resolve_input(in.split_a);
  const auto sb = resolve_input(in.split_b);
  const OutputDir out(g.out_dir);

  const auto jpnd = build_jpnd(read_records(pa), read_records(pb), c.window_ps, c.n_max);
  jpnd.write_csv(out.path("jpnd.csv"));
  json report{{"command", "jpnd"}, {"jpnd", json::parse(jpnd.to_json())}, {"two_photon", two_photon_bars(jpnd)}};

  if (sa.empty()) {
    // The pair itself is taken as the split-pair configuration.
    report["efficiency"] = json::parse(estimate_efficiency(jpnd).to_json());
  } else {
    const auto split = build_jpnd(read_records(sa), read_records(sb), c.window_ps, c.n_max);
    split.write_csv(out.path("jpnd_split.csv"));
    report["split"] = {{"jpnd", json::parse(split.to_json())}, {"two_photon", two_photon_bars(split)}};
    report["efficiency"] = json::parse(estimate_efficiency(split).to_json());
    report["hom"] = json::parse(hom_contrast(jpnd, split).to_json());
  }
  out.write_text("jpnd.json", report.dump(2));

  Summary s{{"command", "jpnd"},
            {"triggers", jpnd.total()},
            {"two_photon", report["two_photon"]},
            {"efficiency", report["efficiency"]},
            {"report", out.path("jpnd.json")}};
  if (report.contains("hom")) s["hom_ratio"] = report["hom"]["suppression_ratio"];
  return s;
}

void emit_error(std::ostream& err, Command cmd, const std::string& kind, const std::string& message, int code,
                const json& extra = nullptr) {
  json e{{"error", kind}, {"message", message}, {"command", to_string(cmd)}, {"exit_code", code}};
  if (!extra.is_null()) e["details"] = extra;
  err << e.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon-number-resolving timing simulator and analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  Inputs in;
  app.add_option("--config", g.config, "JSON run config");
  app.add_option("--seed", g.seed, "RNG seed (simulate)");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--mode", g.mode, "calibration mode: optimal or rising_only (decode)");
  app.add_option("--window", g.window_ps, "pairing / coincidence window in ps");
  app.add_flag("--quiet", g.quiet, "suppress the summary on stdout");

  auto* sim = app.add_subcommand("simulate", "simulate a time-tag stream and truth sidecar");
  sim->add_option("--triggers", in.triggers, "override the trigger count");
  auto* cal = app.add_subcommand("calibrate", "calibrate one detector from a tag stream");
  cal->add_option("stream", in.stream, ".pnrtag input")->required();
  cal->add_option("--detector", in.detector, "A or B");
  auto* dec = app.add_subcommand("decode", "decode photon numbers");
  dec->add_option("stream", in.stream, ".pnrtag input")->required();
  dec->add_option("--calibration", in.calibration, "calibration JSON")->required();
  dec->add_option("--truth", in.truth, "truth CSV; enables the confusion report");
  auto* sta = app.add_subcommand("stats", "photon-number statistics with a Poisson fit");
  sta->add_option("records", in.records, "decoded records (.csv or .pnrrec)")->required();
  auto* jp = app.add_subcommand("jpnd", "joint photon-number distribution of two detectors");
  jp->add_option("records_a", in.records_a, "detector A records")->required();
  jp->add_option("records_b", in.records_b, "detector B records")->required();
  jp->add_option("--split-a", in.split_a, "split-pair reference, detector A");
  jp->add_option("--split-b", in.split_b, "split-pair reference, detector B");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    json j{{"error", "usage"}, {"message", e.what()}, {"exit_code", static_cast<int>(kUsage)}};
    err << j.dump() << '\n';
    return kUsage;
  }

  Command cmd = Command::Simulate;
  std::function<Summary(const GlobalFlags&, const Inputs&, RunConfig)> handler = cmd_simulate;
  if (cal->parsed()) cmd = Command::Calibrate, handler = cmd_calibrate;
  if (dec->parsed()) cmd = Command::Decode, handler = cmd_decode;
  if (sta->parsed()) cmd = Command::Stats, handler = cmd_stats;
  if (jp->parsed()) cmd = Command::Jpnd, handler = cmd_jpnd;

  try {
    RunConfig cfg;
    if (!g.config.empty()) {
      std::error_code ec;
      if (!fs::exists(g.config, ec)) throw ConfigError("config file '" + g.config + "' does not exist");
      cfg = load_run_config(g.config);
    }
    const Summary s = handler(g, in, std::move(cfg));
    if (!g.quiet) out << s.dump(2) << '\n';
    return kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e, cmd);
    json extra = nullptr;
    if (const auto* a = dynamic_cast<const AlignmentError*>(&e)) {
      const auto& m = a->missing_indices();
      extra = {{"missing_trigger_count", m.size()},
               {"missing_trigger_indices", std::vector<std::uint64_t>(m.begin(), m.begin() + std::min<std::size_t>(m.size(), 20))}};
    } else if (const auto* t = dynamic_cast<const TruncationError*>(&e)) {
      extra = {{"offset", t->offset()}};
    } else if (const auto* d = dynamic_cast<const DataError*>(&e)) {
      extra = {{"event_index", d->index()}};
    }
    emit_error(err, cmd, e.kind(), e.what(), code, extra);
    return code;
  } catch (const std::exception& e) {
    emit_error(err, cmd, "internal", e.what(), kIo);
    return kIo;
  }
}

}  // namespace pnr::cli
