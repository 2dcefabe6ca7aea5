#include "olstec/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <system_error>

#include "olstec/errors.hpp"
#include "olstec/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "stream serialization assumes a little-endian host");
static_assert(sizeof(double) == 8, "stream serialization assumes 64-bit IEEE");

namespace olstec {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'T', 'R'};

void put_u32(std::vector<char>* buf, std::uint32_t v) {
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  buf->insert(buf->end(), bytes, bytes + 4);
}

void put_u64(std::vector<char>* buf, std::uint64_t v) {
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  buf->insert(buf->end(), bytes, bytes + 8);
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return v;
}

std::size_t bitmap_bytes(const StreamHeader& header) {
  const std::size_t entries =
      std::size_t(header.rows) * std::size_t(header.cols);
  return (entries + 7) / 8;
}

std::size_t record_bytes(const StreamHeader& header) {
  const std::size_t entries =
      std::size_t(header.rows) * std::size_t(header.cols);
  return bitmap_bytes(header) + entries * 8 * (header.has_truth ? 2 : 1);
}

void check_header_fields(const StreamHeader& header) {
  if (header.rows < 1 || header.cols < 1) {
    throw StructuralError("stream dimensions must be positive");
  }
  if (header.rows > Index(UINT32_MAX) || header.cols > Index(UINT32_MAX)) {
    throw StructuralError("stream dimensions exceed the format's 32-bit limit");
  }
}

}  // namespace

StreamWriter::StreamWriter(const std::string& path, StreamHeader header)
    : path_(path), header_(header) {
  check_header_fields(header_);
  header_.version = kStreamVersion;
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw IoError("cannot open stream for writing: " + path);
  }
  std::vector<char> buf;
  buf.reserve(kStreamHeaderBytes);
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u32(&buf, header_.version);
  put_u32(&buf, std::uint32_t(header_.rows));
  put_u32(&buf, std::uint32_t(header_.cols));
  put_u64(&buf, header_.length);
  put_u32(&buf, header_.has_truth ? 1u : 0u);
  out_.write(buf.data(), std::streamsize(buf.size()));
  if (!out_) {
    throw IoError("failed to write stream header: " + path);
  }
}

StreamWriter::~StreamWriter() {
  if (closed_) return;
  try {
    close();
  } catch (...) {
    // Destructors must not throw; an incomplete bounded stream surfaces
    // through an explicit close() instead.
  }
}

void StreamWriter::write(const MaskedSlice& slice) {
  if (header_.has_truth) {
    throw StructuralError("stream carries ground truth; write(slice, truth)");
  }
  write_record(slice, nullptr);
}

void StreamWriter::write(const MaskedSlice& slice, const Matrix& truth) {
  if (!header_.has_truth) {
    throw StructuralError("stream has no ground-truth flag; write(slice)");
  }
  if (truth.rows() != header_.rows || truth.cols() != header_.cols) {
    throw StructuralError("truth dimensions do not match stream header");
  }
  write_record(slice, &truth);
}

void StreamWriter::write_record(const MaskedSlice& slice,
                                const Matrix* truth) {
  if (closed_) {
    throw StructuralError("write on a closed stream");
  }
  slice.validate();
  if (slice.rows() != header_.rows || slice.cols() != header_.cols) {
    throw StructuralError("slice dimensions do not match stream header");
  }
  if (header_.length != 0 && written_ == header_.length) {
    throw StructuralError("bounded stream is already full");
  }
  std::vector<char> buf;
  buf.reserve(record_bytes(header_));
  std::vector<char> bitmap(bitmap_bytes(header_), 0);
  std::size_t k = 0;
  for (Index l = 0; l < header_.rows; ++l) {
    for (Index w = 0; w < header_.cols; ++w, ++k) {
      if (slice.mask(l, w)) bitmap[k / 8] |= char(1u << (k % 8));
    }
  }
  buf.insert(buf.end(), bitmap.begin(), bitmap.end());
  char bytes[8];
  for (Index l = 0; l < header_.rows; ++l) {
    for (Index w = 0; w < header_.cols; ++w) {
      const double v = slice.values(l, w);
      std::memcpy(bytes, &v, 8);
      buf.insert(buf.end(), bytes, bytes + 8);
    }
  }
  if (truth != nullptr) {
    for (Index l = 0; l < header_.rows; ++l) {
      for (Index w = 0; w < header_.cols; ++w) {
        const double v = (*truth)(l, w);
        std::memcpy(bytes, &v, 8);
        buf.insert(buf.end(), bytes, bytes + 8);
      }
    }
  }
  out_.write(buf.data(), std::streamsize(buf.size()));
  if (!out_) {
    throw IoError("failed to write record: " + path_,
                  std::int64_t(written_));
  }
  ++written_;
}

void StreamWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.flush();
  if (!out_) {
    throw IoError("failed to flush stream: " + path_);
  }
  out_.close();
  if (header_.length != 0 && written_ != header_.length) {
    throw StructuralError("bounded stream closed with " +
                          std::to_string(written_) + " of " +
                          std::to_string(header_.length) + " records");
  }
}

StreamReader::StreamReader(const std::string& path) : path_(path) {
  in_.open(path, std::ios::binary);
  if (!in_) {
    throw IoError("cannot open stream for reading: " + path);
  }
  char buf[kStreamHeaderBytes];
  in_.read(buf, std::streamsize(kStreamHeaderBytes));
  if (std::size_t(in_.gcount()) != kStreamHeaderBytes) {
    throw FormatError("truncated stream header: " + path);
  }
  if (std::memcmp(buf, kMagic, 4) != 0) {
    throw FormatError("bad stream magic: " + path);
  }
  header_.version = get_u32(buf + 4);
  if (header_.version != kStreamVersion) {
    throw FormatError("unsupported stream version " +
                      std::to_string(header_.version) + ": " + path);
  }
  header_.rows = Index(get_u32(buf + 8));
  header_.cols = Index(get_u32(buf + 12));
  header_.length = get_u64(buf + 16);
  header_.has_truth = (get_u32(buf + 24) & 1u) != 0;
  if (header_.rows < 1 || header_.cols < 1) {
    throw FormatError("stream header has zero dimensions: " + path);
  }
}

bool StreamReader::next(MaskedSlice* slice, Matrix* truth) {
  if (slice == nullptr) {
    throw StructuralError("next needs a slice to fill");
  }
  if (header_.length != 0 && read_ == header_.length) {
    return false;
  }
  const std::size_t total = record_bytes(header_);
  std::vector<char> buf(total);
  in_.read(buf.data(), std::streamsize(total));
  const std::size_t got = std::size_t(in_.gcount());
  if (got == 0 && in_.eof()) {
    if (header_.length != 0) {
      throw IoError("stream ends before its declared length: " + path_,
                    std::int64_t(read_));
    }
    return false;
  }
  if (got != total) {
    throw IoError("truncated record: " + path_, std::int64_t(read_));
  }

  slice->mask.resize(header_.rows, header_.cols);
  slice->values.resize(header_.rows, header_.cols);
  const char* p = buf.data();
  std::size_t k = 0;
  for (Index l = 0; l < header_.rows; ++l) {
    for (Index w = 0; w < header_.cols; ++w, ++k) {
      slice->mask(l, w) =
          (std::uint8_t(p[k / 8]) & (1u << (k % 8))) != 0;
    }
  }
  p += bitmap_bytes(header_);
  for (Index l = 0; l < header_.rows; ++l) {
    for (Index w = 0; w < header_.cols; ++w, p += 8) {
      double v;
      std::memcpy(&v, p, 8);
      if (!slice->mask(l, w) && v != 0.0) {
        saw_nonzero_unobserved_ = true;
        v = 0.0;
      }
      slice->values(l, w) = v;
    }
  }
  if (header_.has_truth) {
    if (truth != nullptr) {
      truth->resize(header_.rows, header_.cols);
      for (Index l = 0; l < header_.rows; ++l) {
        for (Index w = 0; w < header_.cols; ++w, p += 8) {
          double v;
          std::memcpy(&v, p, 8);
          (*truth)(l, w) = v;
        }
      }
    }
  }
  slice->index = Index(read_);
  ++read_;
  return true;
}

void write_stream(const std::string& path, const StreamSource& source) {
  source.validate();
  if (source.slices.empty()) {
    throw StructuralError("refusing to write an empty stream");
  }
  StreamHeader header;
  header.rows = source.rows();
  header.cols = source.cols();
  header.length = std::uint64_t(source.size());
  header.has_truth = source.has_truth();
  StreamWriter writer(path, header);
  for (std::size_t t = 0; t < source.slices.size(); ++t) {
    if (header.has_truth) {
      writer.write(source.slices[t], source.truth[t]);
    } else {
      writer.write(source.slices[t]);
    }
  }
  writer.close();
}

StreamSource read_stream(const std::string& path) {
  StreamReader reader(path);
  StreamSource source;
  MaskedSlice slice;
  Matrix truth;
  while (reader.next(&slice, &truth)) {
    source.slices.push_back(slice);
    if (reader.header().has_truth) {
      source.truth.push_back(truth);
    }
  }
  return source;
}

namespace {

// Skips PGM whitespace and '#' comments, then reads one bare token.
std::string pgm_token(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) {
    throw FormatError("truncated pgm header: " + path);
  }
  std::string token;
  while (c != EOF && !std::isspace(c) && c != '#') {
    token.push_back(char(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  return token;
}

long pgm_number(std::istream& in, const std::string& path) {
  const std::string token = pgm_token(in, path);
  long value = 0;
  const auto [end, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size()) {
    throw FormatError("bad pgm header token '" + token + "': " + path);
  }
  return value;
}

}  // namespace

PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open pgm: " + path);
  }
  if (pgm_token(in, path) != "P5") {
    throw FormatError("not a binary pgm (expected P5): " + path);
  }
  const long width = pgm_number(in, path);
  const long height = pgm_number(in, path);
  const long maxval = pgm_number(in, path);
  if (width < 1 || height < 1) {
    throw FormatError("pgm dimensions must be positive: " + path);
  }
  if (maxval < 1 || maxval > 255) {
    throw FormatError("pgm maxval must be in [1, 255]: " + path);
  }
  // The token reader already consumed the single whitespace byte that ends
  // the header, so the stream now sits on the first data byte.
  PgmImage image;
  image.rows = Index(height);
  image.cols = Index(width);
  image.maxval = int(maxval);
  image.pixels.resize(std::size_t(width) * std::size_t(height));
  in.read(reinterpret_cast<char*>(image.pixels.data()),
          std::streamsize(image.pixels.size()));
  if (std::size_t(in.gcount()) != image.pixels.size()) {
    throw IoError("truncated pgm data: " + path);
  }
  return image;
}

StreamSource ingest_frames(const std::vector<std::string>& frame_paths,
                           double observe_ratio, std::uint64_t seed) {
  if (frame_paths.empty()) {
    throw StructuralError("no frames to ingest");
  }
  if (!(observe_ratio > 0.0) || !(observe_ratio <= 1.0)) {
    throw StructuralError("observe ratio must lie in (0, 1]");
  }
  StreamSource source;
  Index rows = 0, cols = 0;
  for (std::size_t t = 0; t < frame_paths.size(); ++t) {
    const PgmImage image = read_pgm(frame_paths[t]);
    if (t == 0) {
      rows = image.rows;
      cols = image.cols;
    } else if (image.rows != rows || image.cols != cols) {
      throw StructuralError("frame dimensions differ: " + frame_paths[t]);
    }
    Matrix values(rows, cols);
    const double scale = 1.0 / double(image.maxval);
    for (Index l = 0; l < rows; ++l) {
      for (Index w = 0; w < cols; ++w) {
        values(l, w) =
            scale * double(image.pixels[std::size_t(l) * std::size_t(cols) +
                                        std::size_t(w)]);
      }
    }
    Rng rng = stream_rng(seed, RngStream::mask, std::uint64_t(t));
    MaskArray mask(rows, cols);
    for (Index l = 0; l < rows; ++l) {
      for (Index w = 0; w < cols; ++w) {
        mask(l, w) = rng.bernoulli(observe_ratio);
      }
    }
    source.slices.push_back(make_masked_slice(values, mask, Index(t)));
  }
  return source;
}

StreamSource ingest_frame_directory(const std::string& directory,
                                    double observe_ratio, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    throw IoError("not a directory: " + directory);
  }
  std::vector<std::string> paths;
  for (const fs::directory_entry& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      paths.push_back(entry.path().string());
    }
  }
  if (paths.empty()) {
    throw StructuralError("no .pgm frames in " + directory);
  }
  std::sort(paths.begin(), paths.end());
  return ingest_frames(paths, observe_ratio, seed);
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::general, 17);
  if (ec != std::errc()) {
    throw Error("format_double failed");
  }
  return std::string(buf, end);
}

namespace {

void check_csv_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw StructuralError("csv field contains a delimiter: " + s);
  }
}

std::ofstream open_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open csv for writing: " + path);
  }
  for (const auto& [key, value] : metadata) {
    if (key.find_first_of("\n\r=") != std::string::npos ||
        value.find_first_of("\n\r") != std::string::npos) {
      throw StructuralError("metadata entries must be single-line key=value");
    }
    out << "# " << key << "=" << value << "\n";
  }
  return out;
}

}  // namespace

void write_metrics_csv(
    const std::string& path, const std::vector<MetricRun>& runs,
    const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ofstream out = open_csv(path, metadata);
  out << "t,residual,running_avg,wall_ms,algo,seed\n";
  for (const MetricRun& run : runs) {
    for (const MetricRecord& r : run.records) {
      check_csv_field(r.algo);
      out << r.t << ',' << format_double(r.residual) << ','
          << format_double(r.running_avg) << ',' << format_double(r.wall_ms)
          << ',' << r.algo << ',' << run.seed << "\n";
    }
  }
  out.flush();
  if (!out) {
    throw IoError("failed to write csv: " + path);
  }
}

void write_summary_csv(
    const std::string& path, const std::vector<SummaryRow>& rows,
    const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ofstream out = open_csv(path, metadata);
  out << "t,algo,residual_mean,residual_std,running_avg_mean,"
         "running_avg_std\n";
  for (const SummaryRow& row : rows) {
    check_csv_field(row.algo);
    out << row.t << ',' << row.algo << ',' << format_double(row.residual_mean)
        << ',' << format_double(row.residual_std) << ','
        << format_double(row.running_avg_mean) << ','
        << format_double(row.running_avg_std) << "\n";
  }
  out.flush();
  if (!out) {
    throw IoError("failed to write csv: " + path);
  }
}

}  // namespace olstec
