#include "qmtk/tagstream.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

namespace qmtk {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'T', '1'};

void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void encode_header(const TagFileHeader& h, std::uint8_t* buf) {
  std::memcpy(buf, kMagic, 4);
  put_u16(buf + 4, h.version);
  put_u16(buf + 6, static_cast<std::uint16_t>(kTagHeaderBytes));
  put_u64(buf + 8, h.clock_resolution_ps);
  put_u64(buf + 16, h.f_rep_mhz);
  put_u32(buf + 24, h.t_int_ms);
  put_u16(buf + 28, h.n_channels);
  put_u16(buf + 30, 0);
}

void encode_record(const TimeTagRecord& r, std::uint8_t* buf) {
  put_u64(buf, r.timestamp_ps);
  put_u16(buf + 8, r.channel);
  std::memset(buf + 10, 0, 6);
}

}  // namespace

TagFileHeader header_for(const ExperimentConfig& cfg) {
  TagFileHeader h;
  h.f_rep_mhz = static_cast<std::uint64_t>(std::llround(cfg.f_rep_hz * 1e3));
  h.t_int_ms = static_cast<std::uint32_t>(std::llround(cfg.t_int_s * 1e3));
  h.n_channels = 3;
  return h;
}

TagFileReader::TagFileReader(std::istream& in) : in_(in) {
  std::uint8_t buf[kTagHeaderBytes];
  in_.read(reinterpret_cast<char*>(buf), kTagHeaderBytes);
  if (in_.gcount() != static_cast<std::streamsize>(kTagHeaderBytes))
    throw DataError("QTT1: truncated header (got " + std::to_string(in_.gcount()) +
                    " of 32 bytes)");
  if (std::memcmp(buf, kMagic, 4) != 0) throw DataError("QTT1: bad magic at byte offset 0");
  header_.version = get_u16(buf + 4);
  if (header_.version != 1)
    throw DataError("QTT1: unsupported version " + std::to_string(header_.version) +
                    " at byte offset 4");
  const std::uint16_t header_len = get_u16(buf + 6);
  if (header_len != kTagHeaderBytes)
    throw DataError("QTT1: unexpected header length " + std::to_string(header_len) +
                    " at byte offset 6");
  header_.clock_resolution_ps = get_u64(buf + 8);
  header_.f_rep_mhz = get_u64(buf + 16);
  header_.t_int_ms = get_u32(buf + 24);
  header_.n_channels = get_u16(buf + 28);
}

bool TagFileReader::next(TimeTagRecord& out) {
  std::uint8_t buf[kTagRecordBytes];
  in_.read(reinterpret_cast<char*>(buf), kTagRecordBytes);
  const auto got = in_.gcount();
  if (got == 0) return false;
  if (got != static_cast<std::streamsize>(kTagRecordBytes))
    throw DataError("QTT1: truncated record at byte offset " +
                    std::to_string(kTagHeaderBytes + n_read_ * kTagRecordBytes));
  out.timestamp_ps = get_u64(buf);
  out.channel = get_u16(buf + 8);
  ++n_read_;
  return true;
}

TagFileWriter::TagFileWriter(std::ostream& out, const TagFileHeader& header) : out_(out) {
  std::uint8_t buf[kTagHeaderBytes];
  encode_header(header, buf);
  out_.write(reinterpret_cast<const char*>(buf), kTagHeaderBytes);
  if (!out_) throw DataError("QTT1: header write failed");
}

void TagFileWriter::write(const TimeTagRecord& rec) {
  if (n_written_ > 0 && rec.timestamp_ps < last_ts_)
    throw DataError("QTT1: record " + std::to_string(n_written_) +
                    " is out of order (write requires sorted input)");
  std::uint8_t buf[kTagRecordBytes];
  encode_record(rec, buf);
  out_.write(reinterpret_cast<const char*>(buf), kTagRecordBytes);
  if (!out_) throw DataError("QTT1: record write failed");
  last_ts_ = rec.timestamp_ps;
  ++n_written_;
}

std::vector<TimeTagRecord> read_tag_file(const std::string& path, TagFileHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tag file " + path);
  TagFileReader reader(in);
  if (header) *header = reader.header();
  std::vector<TimeTagRecord> out;
  const auto size = std::filesystem::file_size(path);
  if (size > kTagHeaderBytes) out.reserve((size - kTagHeaderBytes) / kTagRecordBytes);
  TimeTagRecord rec;
  while (reader.next(rec)) out.push_back(rec);
  return out;
}

void write_tag_file(const std::string& path, const TagFileHeader& header,
                    std::span<const TimeTagRecord> records) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    TagFileWriter writer(out, header);
    for (const auto& rec : records) writer.write(rec);
  }
  std::filesystem::rename(tmp, path);
}

FoldedHistogram fold_and_bin(std::span<const TimeTagRecord> records, std::uint16_t sync_channel,
                             std::int64_t bin_width_ps, FoldFrame frame,
                             std::uint16_t target_channel) {
  if (bin_width_ps <= 0) throw ConfigError("fold_and_bin: bin width must be > 0");
  FoldedHistogram hist;
  hist.bin_width_ps = bin_width_ps;
  hist.origin_ps = frame.origin_ps;
  hist.channel = target_channel;
  const std::int64_t n_bins = (frame.span_ps + bin_width_ps - 1) / bin_width_ps;
  hist.counts.assign(static_cast<std::size_t>(n_bins), 0);
  // re-span to whole bins so [origin, origin + n_bins*width) is the frame
  frame.span_ps = n_bins * bin_width_ps;

  const auto st = detail::fold_scan(records, sync_channel, target_channel, frame,
                                    [&](std::int64_t folded_ps) {
                                      const auto bin = static_cast<std::size_t>(
                                          (folded_ps - hist.origin_ps) / bin_width_ps);
                                      ++hist.counts[bin];
                                    });
  hist.n_shots = st.n_shots;
  hist.orphans = st.orphans;
  hist.out_of_span = st.out_of_span;
  return hist;
}

WindowSumResult window_sum(std::span<const TimeTagRecord> records, std::uint16_t sync_channel,
                           std::uint16_t target_channel, DetectionWindow w, FoldFrame frame) {
  if (w.start_ps >= w.end_ps) throw ConfigError("window_sum: window start must precede end");
  if (w.start_ps < frame.origin_ps || w.end_ps > frame.origin_ps + frame.span_ps)
    throw ConfigError("window_sum: window outside the folded span");
  WindowSumResult res;
  res.stats = detail::fold_scan(records, sync_channel, target_channel, frame,
                                [&](std::int64_t folded_ps) {
                                  if (w.contains(folded_ps)) ++res.count;
                                });
  return res;
}

std::uint64_t window_sum(const FoldedHistogram& hist, DetectionWindow w) {
  if (w.start_ps >= w.end_ps) throw ConfigError("window_sum: window start must precede end");
  if (w.start_ps < hist.origin_ps || w.end_ps > hist.origin_ps + hist.span_ps())
    throw ConfigError("window_sum: window outside the folded span");
  if ((w.start_ps - hist.origin_ps) % hist.bin_width_ps != 0 ||
      (w.end_ps - hist.origin_ps) % hist.bin_width_ps != 0)
    throw ConfigError("window_sum: window edges not aligned to the bin grid");
  const auto first = static_cast<std::size_t>((w.start_ps - hist.origin_ps) / hist.bin_width_ps);
  const auto last = static_cast<std::size_t>((w.end_ps - hist.origin_ps) / hist.bin_width_ps);
  std::uint64_t sum = 0;
  for (std::size_t b = first; b < last; ++b) sum += hist.counts[b];
  return sum;
}

FoldedHistogram merge(const FoldedHistogram& a, const FoldedHistogram& b) {
  if (a.bin_width_ps != b.bin_width_ps || a.origin_ps != b.origin_ps ||
      a.counts.size() != b.counts.size() || a.channel != b.channel)
    throw ConfigError("merge: histogram geometry mismatch");
  FoldedHistogram out = a;
  for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
  out.n_shots += b.n_shots;
  out.orphans += b.orphans;
  out.out_of_span += b.out_of_span;
  return out;
}

void histogram_to_csv(const FoldedHistogram& hist, std::ostream& out) {
  out << "bin_start_ps,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    out << hist.origin_ps + static_cast<std::int64_t>(i) * hist.bin_width_ps << ','
        << hist.counts[i] << '\n';
}

std::uint64_t fnv1a64_file(const std::string& path, std::uint64_t* n_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  std::uint64_t total = 0;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    total += static_cast<std::uint64_t>(got);
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<std::uint8_t>(buf[static_cast<std::size_t>(i)]);
      hash *= 0x100000001b3ULL;
    }
  }
  if (n_bytes) *n_bytes = total;
  return hash;
}

}  // namespace qmtk
