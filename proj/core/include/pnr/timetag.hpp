#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pnr {

/// Timestamps count 0.1 ps ticks from the stream epoch.
using Timestamp = std::int64_t;
inline constexpr double kTicksPerPs = 10.0;

inline constexpr double ticks_to_ps(Timestamp t) { return static_cast<double>(t) / kTicksPerPs; }
Timestamp ps_to_ticks(double ps);

/// Channel map shared by the simulator, the stream format and the decoder.
namespace channel {
inline constexpr std::uint8_t kTrigger = 0;
inline constexpr std::uint8_t kRiseA = 1;
inline constexpr std::uint8_t kFallA = 2;
inline constexpr std::uint8_t kRiseB = 3;
inline constexpr std::uint8_t kFallB = 4;
inline constexpr std::uint8_t kCount = 5;
}  // namespace channel

enum class Detector : std::uint8_t { A = 0, B = 1 };

inline constexpr std::uint8_t rising_channel(Detector d) {
  return d == Detector::A ? channel::kRiseA : channel::kRiseB;
}
inline constexpr std::uint8_t falling_channel(Detector d) {
  return d == Detector::A ? channel::kFallA : channel::kFallB;
}
const char* to_string(Detector d);
Detector parse_detector(const std::string& name);

struct TimeTag {
  std::uint8_t channel = 0;
  Timestamp timestamp = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Stream order: timestamp ascending, ties broken by channel ascending.
inline bool tag_less(const TimeTag& a, const TimeTag& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.channel < b.channel;
}

inline constexpr std::array<char, 8> kStreamMagic{'P', 'N', 'R', 'T', 'A', 'G', '0', '1'};
inline constexpr std::uint16_t kStreamVersion = 1;
/// The only resolution code defined: 1 means 0.1 ps ticks.
inline constexpr std::uint16_t kResolutionTenthPs = 1;
inline constexpr std::size_t kRecordSize = 16;

struct StreamHeader {
  std::array<char, 8> magic = kStreamMagic;
  std::uint16_t version = kStreamVersion;
  std::uint16_t resolution_code = kResolutionTenthPs;
  std::uint16_t channel_count = channel::kCount;
  std::string epoch_note;

  /// Encoded size: 8 magic + 3*u16 + u16 note length + note bytes.
  std::size_t encoded_size() const { return 16 + epoch_note.size(); }
};

/// Incremental `.pnrtag` writer. The header is emitted on construction;
/// every pushed tag is validated against the ordering and channel contract.
class TagWriter {
 public:
  explicit TagWriter(std::ostream& sink, StreamHeader header = {});

  void push(const TimeTag& tag);
  std::uint64_t bytes_written() const noexcept { return bytes_; }
  std::uint64_t records_written() const noexcept { return records_; }

 private:
  std::ostream& sink_;
  StreamHeader header_;
  std::optional<TimeTag> last_;
  std::uint64_t bytes_ = 0;
  std::uint64_t records_ = 0;
};

/// Single-pass buffered reader. Memory use is one fixed-size buffer no
/// matter how large the stream is.
class TagReader {
 public:
  explicit TagReader(std::istream& source, std::size_t buffer_bytes = 1 << 16);

  const StreamHeader& header() const noexcept { return header_; }
  /// Next tag in file order, or nullopt at a clean end of stream.
  std::optional<TimeTag> next();
  /// Byte offset of the next unread record.
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  bool fill(std::size_t need);

  std::istream& source_;
  StreamHeader header_;
  std::vector<unsigned char> buffer_;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
  std::uint64_t offset_ = 0;
  std::optional<TimeTag> last_;
};

std::size_t write_stream(std::span<const TimeTag> tags, std::ostream& sink,
                         const StreamHeader& header = {});
std::vector<TimeTag> read_stream(std::istream& source);

void write_stream_file(const std::string& path, std::span<const TimeTag> tags,
                       const StreamHeader& header = {});
std::vector<TimeTag> read_stream_file(const std::string& path, StreamHeader* header = nullptr);

}  // namespace pnr
