#include "pnr/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "json_util.hpp"
#include "pnr/errors.hpp"

namespace pnr {

using detail::json;

namespace {

void put_le(unsigned char* out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_le(const unsigned char* in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

Detector detector_from_channel(unsigned ch) {
  if (ch == channel::kRiseA) return Detector::A;
  if (ch == channel::kRiseB) return Detector::B;
  throw FormatError("record channel " + std::to_string(ch) + " is not a detector rising channel");
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string DecodeDiagnostics::to_json() const {
  return json{{"records", records},
              {"zero_photon", zero_photon},
              {"class_counts", class_counts},
              {"out_of_range", out_of_range},
              {"out_of_range_widths", kOutOfRangeWidths}}
      .dump(2);
}

std::vector<PhotonRecord> decode_events(std::span<const EdgeEvent> events, const CalibrationModel& model,
                                        DecodeDiagnostics* diagnostics) {
  model.validate();
  const int k = model.component_count();
  const double c = std::cos(model.angle), s = std::sin(model.angle);
  const auto by_coord = model.components_by_coordinate();
  const double lo_limit =
      by_coord.front().center - DecodeDiagnostics::kOutOfRangeWidths * (by_coord.front().sigma + by_coord.front().gamma);
  const double hi_limit =
      by_coord.back().center + DecodeDiagnostics::kOutOfRangeWidths * (by_coord.back().sigma + by_coord.back().gamma);

  DecodeDiagnostics d;
  d.class_counts.assign(static_cast<std::size_t>(k) + 1, 0);
  std::vector<PhotonRecord> out;
  out.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.detector != model.detector) {
      throw CompatibilityError("event " + std::to_string(i) + " is from detector " + to_string(e.detector) +
                               " but the calibration is for detector " + to_string(model.detector));
    }
    PhotonRecord r{e.trigger_index, e.trigger_time, e.detector, 0, std::numeric_limits<double>::quiet_NaN()};
    if (e.has_detection) {
      double x;
      if (model.angle == 0.0) {
        x = e.rise_delay_ps;
      } else {
        x = project_one(e.rise_delay_ps, e.fall_delay_ps, c, s);
      }
      if (!std::isfinite(x)) throw DataError("event " + std::to_string(i) + " has a non-finite projection", i);
      r.projected_coord = x;
      r.n = model.classify(x);
      if (x < lo_limit || x > hi_limit) ++d.out_of_range;
    } else {
      ++d.zero_photon;
    }
    ++d.class_counts[static_cast<std::size_t>(r.n)];
    out.push_back(r);
  }
  d.records = out.size();
  if (diagnostics) *diagnostics = std::move(d);
  return out;
}

ConfusionReport confusion_report(std::span<const PhotonRecord> records, std::span<const TruthRecord> truth,
                                 const CalibrationModel& model, int compare_up_to) {
  const int k = model.component_count();
  std::unordered_map<std::uint64_t, std::uint32_t> true_n;
  true_n.reserve(truth.size());
  for (const auto& t : truth) true_n[t.trigger_index] = t.true_n_a;
  const bool use_b = !records.empty() && records.front().detector == Detector::B;
  if (use_b) {
    for (const auto& t : truth) true_n[t.trigger_index] = t.true_n_b;
  }

  std::vector<std::uint64_t> missing;
  ConfusionReport rep;
  rep.max_n = k;
  rep.counts.assign(k + 1, std::vector<std::uint64_t>(k + 1, 0));
  std::size_t matched = 0;
  for (const auto& r : records) {
    const auto it = true_n.find(r.trigger_index);
    if (it == true_n.end()) {
      missing.push_back(r.trigger_index);
      continue;
    }
    ++matched;
    const int tn = std::min<int>(static_cast<int>(it->second), k);
    rep.counts[tn][std::min(r.n, k)] += 1;
  }
  if (!missing.empty() || matched != truth.size()) {
    std::string msg = "records and truth cover different triggers";
    if (!missing.empty()) msg += " (first record without truth: " + std::to_string(missing.front()) + ")";
    throw AlignmentError(msg, missing);
  }

  rep.accuracy.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    std::uint64_t row = 0;
    for (auto v : rep.counts[i]) row += v;
    rep.accuracy[i] = row ? static_cast<double>(rep.counts[i][i]) / static_cast<double>(row)
                          : std::numeric_limits<double>::quiet_NaN();
  }

  const int limit = compare_up_to > 0 ? std::min(compare_up_to, k) : k;
  for (int i = 1; i <= limit; ++i) {
    std::uint64_t row = 0;
    for (int j = 1; j <= k; ++j) row += rep.counts[i][j];
    if (row == 0) continue;
    const double nrow = static_cast<double>(row);
    for (int j = 1; j <= limit; ++j) {
      CellComparison cell;
      cell.true_n = i;
      cell.decoded_n = j;
      cell.empirical = static_cast<double>(rep.counts[i][j]) / nrow;
      cell.predicted = model.crosstalk[i - 1][j - 1];
      cell.sigma = std::sqrt(cell.predicted * (1.0 - cell.predicted) / nrow);
      const double diff = cell.empirical - cell.predicted;
      if (cell.sigma > 0.0) {
        cell.z = diff / cell.sigma;
      } else {
        cell.z = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      }
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(cell.z));
      rep.comparison.push_back(cell);
    }
  }
  return rep;
}

std::string ConfusionReport::to_json() const {
  json cells = json::array();
  for (const auto& c : comparison) {
    cells.push_back({{"true_n", c.true_n},
                     {"decoded_n", c.decoded_n},
                     {"empirical", c.empirical},
                     {"predicted", c.predicted},
                     {"sigma", c.sigma},
                     {"z", nan_to_null(c.z)}});
  }
  json acc = json::array();
  for (double a : accuracy) acc.push_back(nan_to_null(a));
  return json{{"max_n", max_n},
              {"counts", counts},
              {"accuracy", acc},
              {"comparison", cells},
              {"max_abs_z", nan_to_null(max_abs_z)},
              {"consistent_within_3_sigma", consistent()}}
      .dump(2);
}

void ConfusionReport::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "true_n\\decoded_n";
  for (int j = 0; j <= max_n; ++j) out << ',' << j;
  out << '\n';
  for (int i = 0; i <= max_n; ++i) {
    out << i;
    for (auto v : counts[i]) out << ',' << v;
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_records_csv(const std::string& path, std::span<const PhotonRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.precision(10);
  out << "trigger_index,trigger_time,channel,n,projected_coord_ps\n";
  for (const auto& r : records) {
    out << r.trigger_index << ',' << r.trigger_time << ',' << static_cast<int>(r.channel()) << ',' << r.n << ',';
    if (r.n > 0) out << r.projected_coord;
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<PhotonRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("trigger_index,trigger_time,channel,n", 0) != 0) {
    throw FormatError("'" + path + "' is not a photon record CSV");
  }
  std::vector<PhotonRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() < 4) throw FormatError(path + ":" + std::to_string(line_no) + ": expected at least 4 fields");
    try {
      PhotonRecord r;
      r.trigger_index = std::stoull(f[0]);
      r.trigger_time = std::stoll(f[1]);
      r.detector = detector_from_channel(static_cast<unsigned>(std::stoul(f[2])));
      r.n = std::stoi(f[3]);
      r.projected_coord = f.size() > 4 && !f[4].empty() ? std::stod(f[4]) : std::numeric_limits<double>::quiet_NaN();
      if (r.n < 0) throw FormatError("negative photon number");
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_records_binary(const std::string& path, std::span<const PhotonRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  unsigned char header[16] = {};
  std::memcpy(header, kRecordMagic.data(), 8);
  put_le(header + 8, 1, 2);
  put_le(header + 10, kPhotonRecordSize, 2);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  unsigned char rec[kPhotonRecordSize];
  for (const auto& r : records) {
    if (r.n < 0 || r.n > 255) throw DomainError("photon number does not fit the binary record");
    std::memset(rec, 0, sizeof rec);
    rec[0] = r.channel();
    rec[1] = static_cast<unsigned char>(r.n);
    put_le(rec + 8, static_cast<std::uint64_t>(r.trigger_time), 8);
    put_le(rec + 16, r.trigger_index, 8);
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<PhotonRecord> read_records_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  unsigned char header[16];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw TruncationError("record header truncated", 0);
  if (std::memcmp(header, kRecordMagic.data(), 8) != 0) throw FormatError("bad magic: not a .pnrrec file");
  if (get_le(header + 8, 2) != 1) throw FormatError("unsupported .pnrrec version");
  if (get_le(header + 10, 2) != kPhotonRecordSize) throw FormatError("unexpected .pnrrec record size");
  std::vector<PhotonRecord> out;
  unsigned char rec[kPhotonRecordSize];
  std::uint64_t offset = sizeof header;
  while (true) {
    in.read(reinterpret_cast<char*>(rec), sizeof rec);
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    if (got < sizeof rec) throw TruncationError("record truncated at byte " + std::to_string(offset), offset);
    if (get_le(rec + 2, 2) != 0 || get_le(rec + 4, 4) != 0) {
      throw FormatError("non-zero reserved bytes at byte " + std::to_string(offset));
    }
    PhotonRecord r;
    r.detector = detector_from_channel(rec[0]);
    r.n = rec[1];
    r.trigger_time = static_cast<Timestamp>(get_le(rec + 8, 8));
    r.trigger_index = get_le(rec + 16, 8);
    r.projected_coord = std::numeric_limits<double>::quiet_NaN();
    out.push_back(r);
    offset += sizeof rec;
  }
  return out;
}

std::vector<PhotonRecord> read_records(const std::string& path) {
  const std::string ext = ".pnrrec";
  if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return read_records_binary(path);
  }
  return read_records_csv(path);
}

}  // namespace pnr
