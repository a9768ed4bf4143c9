#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qmtk/config.hpp"
#include "qmtk/errors.hpp"

// QTT1 time-tag file I/O, shot folding, histogram binning and
// detection-window counting. The wire format is fixed little-endian:
//
//   header, 32 bytes:
//     magic "QTT1" | version u16 = 1 | header_len u16 = 32 |
//     clock_resolution_ps u64 = 1 | f_rep_mhz u64 | t_int_ms u32 |
//     n_channels u16 | reserved u16 = 0
//   record, 16 bytes:
//     timestamp_ps u64 | channel u16 | reserved 6 B = 0

namespace qmtk {

constexpr std::uint16_t kChannelSync = 0;     // shot marker at t0
constexpr std::uint16_t kChannelSignal = 1;   // signal APD
constexpr std::uint16_t kChannelMonitor = 2;  // monitor APD

constexpr std::size_t kTagHeaderBytes = 32;
constexpr std::size_t kTagRecordBytes = 16;

struct TimeTagRecord {
  std::uint64_t timestamp_ps = 0;
  std::uint16_t channel = 0;

  friend bool operator==(const TimeTagRecord&, const TimeTagRecord&) = default;
};

struct TagFileHeader {
  std::uint16_t version = 1;
  std::uint64_t clock_resolution_ps = 1;
  std::uint64_t f_rep_mhz = 0;  // repetition rate in millihertz
  std::uint32_t t_int_ms = 0;
  std::uint16_t n_channels = 3;

  double f_rep_hz() const { return static_cast<double>(f_rep_mhz) * 1e-3; }
  double t_int_s() const { return static_cast<double>(t_int_ms) * 1e-3; }
};

TagFileHeader header_for(const ExperimentConfig& cfg);

// Streaming reader. Parse errors carry the byte offset.
class TagFileReader {
 public:
  explicit TagFileReader(std::istream& in);

  const TagFileHeader& header() const { return header_; }
  // Returns false at a clean end of stream; throws DataError on a
  // truncated record.
  bool next(TimeTagRecord& out);
  std::uint64_t records_read() const { return n_read_; }

 private:
  std::istream& in_;
  TagFileHeader header_;
  std::uint64_t n_read_ = 0;
};

class TagFileWriter {
 public:
  TagFileWriter(std::ostream& out, const TagFileHeader& header);
  // Records must arrive sorted by timestamp; unsorted input throws.
  void write(const TimeTagRecord& rec);
  std::uint64_t records_written() const { return n_written_; }

 private:
  std::ostream& out_;
  std::uint64_t n_written_ = 0;
  std::uint64_t last_ts_ = 0;
};

std::vector<TimeTagRecord> read_tag_file(const std::string& path, TagFileHeader* header = nullptr);
void write_tag_file(const std::string& path, const TagFileHeader& header,
                    std::span<const TimeTagRecord> records);

// Folded per-shot frame [origin, origin + span); origin may be negative so
// the pre-t0 half of the monitor pulse folds next to t0.
struct FoldFrame {
  std::int64_t origin_ps = 0;
  std::int64_t span_ps = 0;

  static FoldFrame full_period(const SequenceTiming& t) {
    return {t.frame_origin_ps(), t.shot_period_ps};
  }
};

struct FoldStats {
  std::uint64_t n_shots = 0;      // sync records seen
  std::uint64_t folded = 0;       // target clicks assigned to a frame
  std::uint64_t orphans = 0;      // target clicks before the first sync
  std::uint64_t out_of_span = 0;  // target clicks outside every frame
  std::uint64_t total_target = 0;
};

namespace detail {

// Single pass over timestamp-sorted records. Each target click is folded
// against its most recent sync; clicks past the frame end are re-referenced
// to the next sync when that lands them in the negative part of the frame.
// visit(folded_ps) is called once per in-frame click.
template <typename Visit>
FoldStats fold_scan(std::span<const TimeTagRecord> records, std::uint16_t sync_channel,
                    std::uint16_t target_channel, FoldFrame frame, Visit&& visit) {
  if (frame.span_ps <= 0) throw ConfigError("fold_scan: frame span must be > 0");
  FoldStats st;
  bool have_sync = false;
  std::uint64_t last_sync = 0;
  std::uint64_t prev_ts = 0;
  std::vector<std::uint64_t> pending;  // target clicks since the last sync
  const std::int64_t frame_end = frame.origin_ps + frame.span_ps;

  auto flush = [&](bool have_next, std::uint64_t next_sync) {
    for (std::uint64_t ts : pending) {
      const std::int64_t f = static_cast<std::int64_t>(ts - last_sync);
      if (f >= frame.origin_ps && f < frame_end) {
        ++st.folded;
        visit(f);
        continue;
      }
      if (have_next) {
        const std::int64_t f2 = -static_cast<std::int64_t>(next_sync - ts);
        if (f2 >= frame.origin_ps && f2 < frame_end) {
          ++st.folded;
          visit(f2);
          continue;
        }
      }
      ++st.out_of_span;
    }
    pending.clear();
  };

  for (const TimeTagRecord& rec : records) {
    if (rec.timestamp_ps < prev_ts)
      throw DataError("fold_scan: records not sorted by timestamp");
    prev_ts = rec.timestamp_ps;
    if (rec.channel == sync_channel) {
      if (have_sync) {
        flush(true, rec.timestamp_ps);
      } else {
        st.orphans += pending.size();
        pending.clear();
      }
      have_sync = true;
      last_sync = rec.timestamp_ps;
      ++st.n_shots;
    } else if (rec.channel == target_channel) {
      ++st.total_target;
      pending.push_back(rec.timestamp_ps);
    }
  }
  if (have_sync)
    flush(false, 0);
  else
    st.orphans += pending.size();
  return st;
}

}  // namespace detail

struct FoldedHistogram {
  std::int64_t bin_width_ps = 5;
  std::int64_t origin_ps = 0;
  std::uint16_t channel = 0;
  std::uint64_t n_shots = 0;
  std::uint64_t orphans = 0;
  std::uint64_t out_of_span = 0;
  std::vector<std::uint64_t> counts;

  std::int64_t span_ps() const {
    return bin_width_ps * static_cast<std::int64_t>(counts.size());
  }
};

FoldedHistogram fold_and_bin(std::span<const TimeTagRecord> records, std::uint16_t sync_channel,
                             std::int64_t bin_width_ps, FoldFrame frame,
                             std::uint16_t target_channel);

// Exact count of target clicks with folded time in [w.start, w.end).
struct WindowSumResult {
  std::uint64_t count = 0;
  FoldStats stats;
};
WindowSumResult window_sum(std::span<const TimeTagRecord> records, std::uint16_t sync_channel,
                           std::uint16_t target_channel, DetectionWindow w, FoldFrame frame);

// Histogram variant; the window must lie inside the span and align with the
// bin grid.
std::uint64_t window_sum(const FoldedHistogram& hist, DetectionWindow w);

// Merge per-chunk histograms (elementwise; geometry must match).
FoldedHistogram merge(const FoldedHistogram& a, const FoldedHistogram& b);

// CSV columns: bin_start_ps,count
void histogram_to_csv(const FoldedHistogram& hist, std::ostream& out);

std::uint64_t fnv1a64_file(const std::string& path, std::uint64_t* n_bytes = nullptr);

}  // namespace qmtk
