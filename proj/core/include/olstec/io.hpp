#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "olstec/metrics.hpp"
#include "olstec/model.hpp"

namespace olstec {

// Binary stream layout, version 1, little-endian throughout:
//   header: "TSTR", version u32, L u32, W u32, T u64 (0 = unbounded),
//           flags u32 (bit 0: each record carries a ground-truth block)
//   record: mask bitmap of ceil(L*W/8) bytes (row-major, LSB of each byte
//           first, bit set = observed), L*W float64 values (row-major,
//           unobserved written as exactly 0.0), then L*W float64 truth
//           values when flags bit 0 is set.
inline constexpr std::uint32_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 28;

struct StreamHeader {
  std::uint32_t version = kStreamVersion;
  Index rows = 0;
  Index cols = 0;
  std::uint64_t length = 0;  // 0 means unbounded
  bool has_truth = false;
};

/// Record-at-a-time writer. The header goes out on construction; close()
/// checks that a bounded stream received exactly `length` records.
class StreamWriter {
 public:
  StreamWriter(const std::string& path, StreamHeader header);
  ~StreamWriter();

  void write(const MaskedSlice& slice);
  void write(const MaskedSlice& slice, const Matrix& truth);
  void close();

  std::uint64_t written() const { return written_; }

 private:
  void write_record(const MaskedSlice& slice, const Matrix* truth);

  std::ofstream out_;
  std::string path_;
  StreamHeader header_;
  std::uint64_t written_ = 0;
  bool closed_ = false;
};

/// Record-at-a-time reader; a full stream never needs to be resident.
class StreamReader {
 public:
  explicit StreamReader(const std::string& path);

  const StreamHeader& header() const { return header_; }

  /// Reads the next record into slice (and truth when the stream carries
  /// one; ignored otherwise). Returns false at a clean end of stream.
  bool next(MaskedSlice* slice, Matrix* truth = nullptr);

  /// True once any record held a nonzero value at an unobserved position;
  /// such values are zeroed on read.
  bool saw_nonzero_unobserved() const { return saw_nonzero_unobserved_; }

 private:
  std::ifstream in_;
  std::string path_;
  StreamHeader header_;
  std::uint64_t read_ = 0;
  bool saw_nonzero_unobserved_ = false;
};

void write_stream(const std::string& path, const StreamSource& source);
StreamSource read_stream(const std::string& path);

struct PgmImage {
  Index rows = 0;
  Index cols = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;  // row-major
};

/// Binary (P5) PGM with maxval <= 255.
PgmImage read_pgm(const std::string& path);

/// Frames become slices in path order: pixels scaled to [0,1], masks drawn
/// Bernoulli(observe_ratio) per frame, no ground-truth block.
StreamSource ingest_frames(const std::vector<std::string>& frame_paths,
                           double observe_ratio, std::uint64_t seed);

/// Directory variant: ingests every regular file in lexicographic order.
StreamSource ingest_frame_directory(const std::string& directory,
                                    double observe_ratio, std::uint64_t seed);

/// Shortest decimal form at 17 significant digits via std::to_chars;
/// locale-independent and round-trip exact.
std::string format_double(double value);

/// One tracker run plus what a reader needs to reproduce it.
struct MetricRun {
  std::vector<MetricRecord> records;
  std::uint64_t seed = 0;
};

/// Schema: `t,residual,running_avg,wall_ms,algo,seed`, preceded by `#`
/// metadata lines (one `# key=value` per pair) and the mandatory header row.
void write_metrics_csv(
    const std::string& path, const std::vector<MetricRun>& runs,
    const std::vector<std::pair<std::string, std::string>>& metadata);

/// Schema: `t,algo,residual_mean,residual_std,running_avg_mean,
/// running_avg_std`, same metadata convention.
void write_summary_csv(
    const std::string& path, const std::vector<SummaryRow>& rows,
    const std::vector<std::pair<std::string, std::string>>& metadata);

}  // namespace olstec
