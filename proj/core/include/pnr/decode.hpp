#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pnr/calib.hpp"
#include "pnr/detector_sim.hpp"
#include "pnr/pairing.hpp"

namespace pnr {

struct PhotonRecord {
  std::uint64_t trigger_index = 0;
  Timestamp trigger_time = 0;
  Detector detector = Detector::A;
  int n = 0;
  /// Projected coordinate in ps; NaN when n == 0.
  double projected_coord = 0.0;

  /// Channel id of the detector's rising edge, used as the record's channel.
  std::uint8_t channel() const { return rising_channel(detector); }
};

struct DecodeDiagnostics {
  std::uint64_t records = 0;
  std::uint64_t zero_photon = 0;
  /// class_counts[n] for n = 0..k.
  std::vector<std::uint64_t> class_counts;
  /// Detections more than kOutOfRangeWidths (sigma + gamma) beyond the
  /// outermost component center; they are still assigned to the outer class.
  std::uint64_t out_of_range = 0;

  static constexpr double kOutOfRangeWidths = 10.0;
  std::string to_json() const;
};

/// One record per event, in input order. Throws CompatibilityError when an
/// event's detector differs from the model's and DataError (with the event
/// index) for a non-finite projection.
std::vector<PhotonRecord> decode_events(std::span<const EdgeEvent> events, const CalibrationModel& model,
                                        DecodeDiagnostics* diagnostics = nullptr);

struct CellComparison {
  int true_n = 0;
  int decoded_n = 0;
  double empirical = 0.0;  ///< row-normalized
  double predicted = 0.0;
  double sigma = 0.0;      ///< multinomial standard error of the empirical fraction
  double z = 0.0;
};

struct ConfusionReport {
  int max_n = 0;  ///< rows/cols 0..max_n; true counts above max_n fold into max_n
  std::vector<std::vector<std::uint64_t>> counts;  ///< counts[true][decoded]
  std::vector<double> accuracy;                    ///< per true class; NaN for empty rows
  /// Detected rows/cols 1..max_n against the model's crosstalk prediction.
  std::vector<CellComparison> comparison;
  double max_abs_z = 0.0;

  bool consistent(double z_limit = 3.0) const { return max_abs_z <= z_limit; }
  std::string to_json() const;
  void write_csv(const std::string& path) const;
};

/// Throws AlignmentError unless records and truth cover the same trigger
/// indices. Compared cells are limited to photon numbers <= compare_up_to
/// (0 = all classes).
ConfusionReport confusion_report(std::span<const PhotonRecord> records, std::span<const TruthRecord> truth,
                                 const CalibrationModel& model, int compare_up_to = 0);

void write_records_csv(const std::string& path, std::span<const PhotonRecord> records);
std::vector<PhotonRecord> read_records_csv(const std::string& path);

/// Binary sidecar: "PNRREC01", u16 version, u16 record size (24), u32
/// reserved, then 24-byte little-endian records
/// {u8 channel, u8 n, u16 0, u32 0, i64 trigger_time, u64 trigger_index}.
inline constexpr std::array<char, 8> kRecordMagic{'P', 'N', 'R', 'R', 'E', 'C', '0', '1'};
inline constexpr std::size_t kPhotonRecordSize = 24;
void write_records_binary(const std::string& path, std::span<const PhotonRecord> records);
std::vector<PhotonRecord> read_records_binary(const std::string& path);

/// Picks the reader by extension (.pnrrec binary, anything else CSV).
std::vector<PhotonRecord> read_records(const std::string& path);

}  // namespace pnr
