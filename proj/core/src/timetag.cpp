#include "pnr/timetag.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pnr/errors.hpp"

namespace pnr {

namespace {

void put_u16(unsigned char* out, std::uint16_t v) {
  out[0] = static_cast<unsigned char>(v & 0xff);
  out[1] = static_cast<unsigned char>(v >> 8);
}

std::uint16_t get_u16(const unsigned char* in) {
  return static_cast<std::uint16_t>(in[0] | (in[1] << 8));
}

void put_i64(unsigned char* out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
}

std::int64_t get_i64(const unsigned char* in) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return static_cast<std::int64_t>(u);
}

void check_header(const StreamHeader& h) {
  if (h.magic != kStreamMagic) throw FormatError("bad magic: not a .pnrtag stream");
  if (h.version != kStreamVersion) {
    throw FormatError("unsupported .pnrtag version " + std::to_string(h.version));
  }
  if (h.resolution_code != kResolutionTenthPs) {
    throw FormatError("unsupported resolution code " + std::to_string(h.resolution_code));
  }
  if (h.channel_count == 0 || h.channel_count > channel::kCount) {
    throw FormatError("channel_count out of range: " + std::to_string(h.channel_count));
  }
  if (h.epoch_note.size() > 0xffff) throw FormatError("epoch note longer than 65535 bytes");
}

}  // namespace

Timestamp ps_to_ticks(double ps) { return static_cast<Timestamp>(std::llround(ps * kTicksPerPs)); }

const char* to_string(Detector d) { return d == Detector::A ? "A" : "B"; }

Detector parse_detector(const std::string& name) {
  if (name == "A" || name == "a") return Detector::A;
  if (name == "B" || name == "b") return Detector::B;
  throw DomainError("unknown detector '" + name + "' (expected A or B)");
}

TagWriter::TagWriter(std::ostream& sink, StreamHeader header)
    : sink_(sink), header_(std::move(header)) {
  check_header(header_);
  std::vector<unsigned char> buf(header_.encoded_size());
  std::memcpy(buf.data(), header_.magic.data(), 8);
  put_u16(buf.data() + 8, header_.version);
  put_u16(buf.data() + 10, header_.resolution_code);
  put_u16(buf.data() + 12, header_.channel_count);
  put_u16(buf.data() + 14, static_cast<std::uint16_t>(header_.epoch_note.size()));
  std::memcpy(buf.data() + 16, header_.epoch_note.data(), header_.epoch_note.size());
  sink_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!sink_) throw IoError("failed to write stream header");
  bytes_ = buf.size();
}

void TagWriter::push(const TimeTag& tag) {
  if (tag.channel >= header_.channel_count) {
    throw DomainError("channel " + std::to_string(tag.channel) + " out of range");
  }
  if (last_ && tag_less(tag, *last_)) {
    throw OrderingError("tags not sorted at record " + std::to_string(records_));
  }
  unsigned char rec[kRecordSize] = {};
  rec[0] = tag.channel;
  put_i64(rec + 8, tag.timestamp);
  sink_.write(reinterpret_cast<const char*>(rec), kRecordSize);
  if (!sink_) throw IoError("failed to write record " + std::to_string(records_));
  last_ = tag;
  bytes_ += kRecordSize;
  ++records_;
}

TagReader::TagReader(std::istream& source, std::size_t buffer_bytes)
    : source_(source), buffer_(std::max<std::size_t>(buffer_bytes, 256)) {
  if (!fill(16)) throw FormatError("stream shorter than the fixed header");
  const unsigned char* p = buffer_.data() + begin_;
  std::memcpy(header_.magic.data(), p, 8);
  if (header_.magic != kStreamMagic) throw FormatError("bad magic: not a .pnrtag stream");
  header_.version = get_u16(p + 8);
  header_.resolution_code = get_u16(p + 10);
  header_.channel_count = get_u16(p + 12);
  const std::size_t note_len = get_u16(p + 14);
  begin_ += 16;
  offset_ += 16;
  std::size_t copied = 0;
  while (copied < note_len) {
    if (begin_ == end_ && !fill(1)) throw TruncationError("truncated epoch note", offset_);
    const std::size_t take = std::min(note_len - copied, end_ - begin_);
    header_.epoch_note.append(reinterpret_cast<const char*>(buffer_.data() + begin_), take);
    begin_ += take;
    offset_ += take;
    copied += take;
  }
  check_header(header_);
}

bool TagReader::fill(std::size_t need) {
  if (end_ - begin_ >= need) return true;
  std::memmove(buffer_.data(), buffer_.data() + begin_, end_ - begin_);
  end_ -= begin_;
  begin_ = 0;
  while (end_ < need && source_) {
    source_.read(reinterpret_cast<char*>(buffer_.data() + end_),
                 static_cast<std::streamsize>(buffer_.size() - end_));
    end_ += static_cast<std::size_t>(source_.gcount());
  }
  return end_ - begin_ >= need;
}

std::optional<TimeTag> TagReader::next() {
  if (!fill(kRecordSize)) {
    if (end_ == begin_) return std::nullopt;
    throw TruncationError("truncated record at byte offset " + std::to_string(offset_), offset_);
  }
  const unsigned char* rec = buffer_.data() + begin_;
  TimeTag tag{rec[0], get_i64(rec + 8)};
  if (rec[1] != 0 || get_u16(rec + 2) != 0 || rec[4] != 0 || rec[5] != 0 || rec[6] != 0 ||
      rec[7] != 0) {
    throw FormatError("non-zero reserved bytes at byte offset " + std::to_string(offset_));
  }
  if (tag.channel >= header_.channel_count) {
    throw FormatError("channel " + std::to_string(tag.channel) + " out of range at byte offset " +
                      std::to_string(offset_));
  }
  if (last_ && tag_less(tag, *last_)) {
    throw FormatError("records out of order at byte offset " + std::to_string(offset_));
  }
  last_ = tag;
  begin_ += kRecordSize;
  offset_ += kRecordSize;
  return tag;
}

std::size_t write_stream(std::span<const TimeTag> tags, std::ostream& sink,
                         const StreamHeader& header) {
  TagWriter writer(sink, header);
  for (const auto& t : tags) writer.push(t);
  return writer.bytes_written();
}

std::vector<TimeTag> read_stream(std::istream& source) {
  TagReader reader(source);
  std::vector<TimeTag> out;
  while (auto tag = reader.next()) out.push_back(*tag);
  return out;
}

void write_stream_file(const std::string& path, std::span<const TimeTag> tags,
                       const StreamHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_stream(tags, out, header);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<TimeTag> read_stream_file(const std::string& path, StreamHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  TagReader reader(in);
  if (header) *header = reader.header();
  std::vector<TimeTag> out;
  while (auto tag = reader.next()) out.push_back(*tag);
  return out;
}

}  // namespace pnr
