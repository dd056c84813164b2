#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnr {

/// Base of every error raised by the library. Each subclass maps onto one
/// failure category; the command-line front end turns categories into exit
/// codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define PNR_DEFINE_ERROR(Name, Kind)                              \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return Kind; }   \
  };

PNR_DEFINE_ERROR(OrderingError, "ordering")
PNR_DEFINE_ERROR(DomainError, "domain")
PNR_DEFINE_ERROR(FormatError, "format")
PNR_DEFINE_ERROR(IoError, "io")
PNR_DEFINE_ERROR(ConfigError, "config")
PNR_DEFINE_ERROR(EmptySampleError, "empty_sample")
PNR_DEFINE_ERROR(CalibrationError, "calibration")
PNR_DEFINE_ERROR(DegenerateOverlapError, "degenerate_overlap")
PNR_DEFINE_ERROR(UndetectablePhotonNumberError, "undetectable_photon_number")
PNR_DEFINE_ERROR(CompatibilityError, "compatibility")
PNR_DEFINE_ERROR(InsufficientDataError, "insufficient_data")
PNR_DEFINE_ERROR(UnboundedEstimateError, "unbounded_estimate")
PNR_DEFINE_ERROR(UndefinedRatioError, "undefined_ratio")

#undef PNR_DEFINE_ERROR

/// A record ended before its 16 bytes were available.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::uint64_t offset)
      : Error(what), offset_(offset) {}
  const char* kind() const noexcept override { return "truncation"; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Mixture fit stopped without meeting its convergence test. Carries the
/// best parameter vector seen so far (in the optimizer's native encoding).
class FitError : public Error {
 public:
  FitError(const std::string& what, std::vector<double> best, double best_log_likelihood)
      : Error(what), best_(std::move(best)), best_ll_(best_log_likelihood) {}
  const char* kind() const noexcept override { return "fit"; }
  const std::vector<double>& best_parameters() const noexcept { return best_; }
  double best_log_likelihood() const noexcept { return best_ll_; }

 private:
  std::vector<double> best_;
  double best_ll_;
};

/// Non-finite projected coordinate or similar per-event corruption.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  const char* kind() const noexcept override { return "data"; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Two record sets that should cover the same triggers do not.
class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& what, std::vector<std::uint64_t> missing)
      : Error(what), missing_(std::move(missing)) {}
  const char* kind() const noexcept override { return "alignment"; }
  const std::vector<std::uint64_t>& missing_indices() const noexcept { return missing_; }

 private:
  std::vector<std::uint64_t> missing_;
};

}  // namespace pnr
