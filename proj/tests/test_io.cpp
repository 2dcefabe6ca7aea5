#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "olstec/errors.hpp"
#include "olstec/io.hpp"
#include "olstec/synth.hpp"
#include "support/fixtures.hpp"
#include "support/helpers.hpp"

using namespace olstec;
using testing_support::fixture_pgm_frames;
using testing_support::kFrameFixtureRatio;
using testing_support::kFrameFixtureSeed;
using testing_support::slurp;
using testing_support::spit;
using testing_support::unit_temp_path;

namespace {

std::string tmp(const std::string& name) {
  return unit_temp_path("io", name);
}

StreamSource small_source(bool with_truth) {
  ScenarioSpec spec;
  spec.rows = 6;
  spec.cols = 5;
  spec.length = 4;
  spec.rank = 2;
  spec.observe_ratio = 0.6;
  spec.seed = 3;
  StreamSource source = gen_stationary(spec);
  if (!with_truth) source.truth.clear();
  return source;
}

void append_u32(std::string* buf, std::uint32_t v) {
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  buf->append(bytes, 4);
}

void append_u64(std::string* buf, std::uint64_t v) {
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  buf->append(bytes, 8);
}

}  // namespace

TEST_CASE("file sizes follow the documented layout arithmetic") {
  {
    ScenarioSpec spec;  // 100 x 100 defaults
    spec.length = 2;
    spec.seed = 1;
    const std::string path = tmp("layout_truth.tstr");
    write_stream(path, gen_stationary(spec));
    // 28 header + 2 * (1250 bitmap + 80000 values + 80000 truth).
    CHECK(std::filesystem::file_size(path) == 28 + 2 * 161250);
    StreamSource no_truth = gen_stationary(spec);
    no_truth.truth.clear();
    const std::string bare = tmp("layout_bare.tstr");
    write_stream(bare, no_truth);
    CHECK(std::filesystem::file_size(bare) == 28 + 2 * 81250);
  }
  {
    // 3 x 3 = 9 cells: the bitmap rounds up to 2 bytes.
    StreamHeader header;
    header.rows = 3;
    header.cols = 3;
    header.length = 4;
    const std::string path = tmp("layout_odd.tstr");
    StreamWriter writer(path, header);
    MaskedSlice slice;
    slice.values = Matrix::Zero(3, 3);
    slice.mask = MaskArray::Constant(3, 3, true);
    for (int t = 0; t < 4; ++t) writer.write(slice);
    writer.close();
    CHECK(std::filesystem::file_size(path) == 28 + 4 * (2 + 72));
  }
}

TEST_CASE("streams round-trip bit for bit") {
  for (bool with_truth : {true, false}) {
    CAPTURE(with_truth);
    StreamSource source = small_source(with_truth);
    // Plant special values at observed positions of slice 0.
    Index planted = 0;
    for (Index l = 0; l < 6 && planted < 3; ++l) {
      for (Index w = 0; w < 5 && planted < 3; ++w) {
        if (!source.slices[0].mask(l, w)) continue;
        const double specials[] = {-0.0, 5e-324, -1.7e308};
        source.slices[0].values(l, w) = specials[planted++];
      }
    }
    const std::string path = tmp(with_truth ? "rt_truth.tstr" : "rt.tstr");
    write_stream(path, source);
    const StreamSource back = read_stream(path);
    REQUIRE(back.slices.size() == source.slices.size());
    CHECK(back.truth.size() == source.truth.size());
    for (std::size_t t = 0; t < source.slices.size(); ++t) {
      CHECK(back.slices[t].index == Index(t));
      CHECK((back.slices[t].mask == source.slices[t].mask).all());
      REQUIRE(back.slices[t].values.size() ==
              source.slices[t].values.size());
      CHECK(std::memcmp(back.slices[t].values.data(),
                        source.slices[t].values.data(),
                        sizeof(double) *
                            std::size_t(source.slices[t].values.size())) == 0);
      if (with_truth) {
        CHECK(std::memcmp(back.truth[t].data(), source.truth[t].data(),
                          sizeof(double) *
                              std::size_t(source.truth[t].size())) == 0);
      }
    }
  }
}

TEST_CASE("corrupt headers are rejected") {
  const std::string path = tmp("corrupt.tstr");
  write_stream(path, small_source(false));
  const std::string good = slurp(path);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  spit(path, bad_magic);
  CHECK_THROWS_AS(StreamReader{path}, FormatError);

  std::string bad_version = good;
  bad_version[4] = 2;
  spit(path, bad_version);
  try {
    StreamReader reader(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
  }

  spit(path, good.substr(0, 10));
  CHECK_THROWS_AS(StreamReader{path}, FormatError);

  std::string zero_dims = "TSTR";
  append_u32(&zero_dims, kStreamVersion);
  append_u32(&zero_dims, 0);
  append_u32(&zero_dims, 5);
  append_u64(&zero_dims, 0);
  append_u32(&zero_dims, 0);
  spit(path, zero_dims);
  CHECK_THROWS_AS(StreamReader{path}, FormatError);

  CHECK_THROWS_AS(StreamReader{tmp("does_not_exist.tstr")}, IoError);
}

TEST_CASE("truncated and short files name the failing record") {
  const std::string path = tmp("truncated.tstr");
  write_stream(path, small_source(false));
  const std::string good = slurp(path);
  const std::size_t record = (6 * 5 + 7) / 8 + 6 * 5 * 8;

  // Cut into the middle of record 1.
  spit(path, good.substr(0, 28 + record + 10));
  {
    StreamReader reader(path);
    MaskedSlice slice;
    CHECK(reader.next(&slice));
    try {
      reader.next(&slice);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.slice_index() == 1);
    }
  }

  // Cut exactly at a record boundary: still short of the declared length.
  spit(path, good.substr(0, 28 + record));
  {
    StreamReader reader(path);
    MaskedSlice slice;
    CHECK(reader.next(&slice));
    try {
      reader.next(&slice);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.slice_index() == 1);
      CHECK(std::string(e.what()).find("declared length") !=
            std::string::npos);
    }
  }
}

TEST_CASE("unbounded streams end cleanly at a record boundary") {
  const std::string path = tmp("unbounded.tstr");
  StreamHeader header;
  header.rows = 3;
  header.cols = 3;
  header.length = 0;
  StreamWriter writer(path, header);
  MaskedSlice slice;
  slice.values = Matrix::Zero(3, 3);
  slice.mask = MaskArray::Constant(3, 3, true);
  writer.write(slice);
  writer.write(slice);
  writer.close();

  StreamReader reader(path);
  CHECK(reader.header().length == 0);
  MaskedSlice got;
  CHECK(reader.next(&got));
  CHECK(reader.next(&got));
  CHECK_FALSE(reader.next(&got));

  // A cut inside a record still fails loudly.
  const std::string good = slurp(path);
  spit(path, good.substr(0, good.size() - 5));
  StreamReader short_reader(path);
  CHECK(short_reader.next(&got));
  CHECK_THROWS_AS(short_reader.next(&got), IoError);
}

TEST_CASE("nonzero bytes under an unobserved cell are zeroed and flagged") {
  StreamHeader header;
  header.rows = 3;
  header.cols = 3;
  header.length = 1;
  MaskedSlice slice;
  slice.values = Matrix::Zero(3, 3);
  slice.mask = MaskArray::Constant(3, 3, true);
  slice.mask(0, 0) = false;  // cell 0 is unobserved
  const std::string path = tmp("unobserved.tstr");
  {
    StreamWriter writer(path, header);
    writer.write(slice);
    writer.close();
  }
  std::string bytes = slurp(path);
  const double one = 1.0;
  std::memcpy(bytes.data() + 28 + 2, &one, 8);  // value of cell 0
  spit(path, bytes);

  StreamReader reader(path);
  MaskedSlice got;
  REQUIRE(reader.next(&got));
  CHECK(got.values(0, 0) == 0.0);
  CHECK(reader.saw_nonzero_unobserved());

  // An untampered stream never sets the flag.
  const std::string clean = tmp("unobserved_clean.tstr");
  {
    StreamWriter writer(clean, header);
    writer.write(slice);
    writer.close();
  }
  StreamReader clean_reader(clean);
  REQUIRE(clean_reader.next(&got));
  CHECK_FALSE(clean_reader.saw_nonzero_unobserved());
}

TEST_CASE("writer misuse is rejected") {
  MaskedSlice slice;
  slice.values = Matrix::Zero(3, 3);
  slice.mask = MaskArray::Constant(3, 3, true);
  const Matrix truth = Matrix::Zero(3, 3);

  StreamHeader header;
  header.rows = 3;
  header.cols = 3;
  header.length = 1;

  CHECK_THROWS_AS(StreamWriter("/nonexistent_dir_zz/x.tstr", header),
                  IoError);

  {
    StreamWriter writer(tmp("misuse1.tstr"), header);
    CHECK_THROWS_AS(writer.write(slice, truth), StructuralError);
    writer.write(slice);
    CHECK_THROWS_AS(writer.write(slice), StructuralError);  // already full
    writer.close();
    CHECK_THROWS_AS(writer.write(slice), StructuralError);  // closed
  }
  {
    header.has_truth = true;
    StreamWriter writer(tmp("misuse2.tstr"), header);
    CHECK_THROWS_AS(writer.write(slice), StructuralError);
    CHECK_THROWS_AS(writer.write(slice, Matrix::Zero(2, 3)),
                    StructuralError);
    writer.write(slice, truth);
    writer.close();
    header.has_truth = false;
  }
  {
    header.length = 3;
    StreamWriter writer(tmp("misuse3.tstr"), header);
    writer.write(slice);
    CHECK_THROWS_AS(writer.close(), StructuralError);  // 1 of 3 records
    header.length = 1;
  }
  {
    StreamWriter writer(tmp("misuse4.tstr"), header);
    MaskedSlice wrong;
    wrong.values = Matrix::Zero(2, 3);
    wrong.mask = MaskArray::Constant(2, 3, true);
    CHECK_THROWS_AS(writer.write(wrong), StructuralError);
    MaskedSlice dirty = slice;
    dirty.mask(1, 1) = false;
    dirty.values(1, 1) = 0.5;  // nonzero under an unobserved cell
    CHECK_THROWS_AS(writer.write(dirty), StructuralError);
    writer.write(slice);
    writer.close();
  }
  StreamHeader zero;
  zero.rows = 0;
  zero.cols = 3;
  CHECK_THROWS_AS(StreamWriter(tmp("misuse5.tstr"), zero), StructuralError);
}

TEST_CASE("pgm parsing handles comments, maxval scaling, and errors") {
  const auto frames = fixture_pgm_frames();
  const std::string first = tmp(frames[0].name);
  const std::string second = tmp(frames[1].name);
  spit(first, frames[0].bytes);
  spit(second, frames[1].bytes);

  const PgmImage a = read_pgm(first);
  CHECK(a.rows == 6);
  CHECK(a.cols == 5);
  CHECK(a.maxval == 255);
  REQUIRE(a.pixels.size() == 30);
  for (int k = 0; k < 30; ++k) {
    CHECK(a.pixels[std::size_t(k)] == std::uint8_t((k * 37 + 11) % 256));
  }

  const PgmImage b = read_pgm(second);  // comment line + maxval 200
  CHECK(b.maxval == 200);
  CHECK(b.pixels[0] == 7);

  const std::string bad = tmp("bad.pgm");
  spit(bad, "P2\n2 2\n255\n");
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
  spit(bad, "P5\n2 2\n0\n\0\0\0\0");
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
  spit(bad, "P5\n2 2\n999\n\0\0\0\0");
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
  spit(bad, "P5\nfoo 2\n255\n");
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
  spit(bad, "P5\n2 2\n255\nab");  // 2 of 4 data bytes
  CHECK_THROWS_AS(read_pgm(bad), IoError);
  spit(bad, "P5\n2 2\n");  // header stops early
  CHECK_THROWS_AS(read_pgm(bad), FormatError);
  CHECK_THROWS_AS(read_pgm(tmp("missing.pgm")), IoError);
}

TEST_CASE("pixel values scale into the unit interval") {
  const std::string path = tmp("gray.pgm");
  std::string bytes = "P5\n2 2\n255\n";
  const std::uint8_t pixels[4] = {0, 128, 255, 64};
  bytes.append(reinterpret_cast<const char*>(pixels), 4);
  spit(path, bytes);
  const StreamSource source = ingest_frames({path}, 1.0, 1);
  REQUIRE(source.slices.size() == 1);
  const Matrix& v = source.slices[0].values;
  CHECK(v(0, 0) == 0.0);
  CHECK(v(0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-14));
  CHECK(v(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(v(1, 1) == doctest::Approx(64.0 / 255.0).epsilon(1e-14));
  CHECK(source.truth.empty());
}

TEST_CASE("frame ingestion reproduces the committed stream fixture") {
  const auto frames = fixture_pgm_frames();
  std::vector<std::string> paths;
  for (const auto& frame : frames) {
    paths.push_back(tmp(frame.name));
    spit(paths.back(), frame.bytes);
  }
  const StreamSource source =
      ingest_frames(paths, kFrameFixtureRatio, kFrameFixtureSeed);
  const std::string out = tmp("frames.tstr");
  write_stream(out, source);
  CHECK(slurp(out) ==
        slurp(std::string(OLSTEC_FIXTURE_DIR) + "/frames.tstr"));

  // Masks are a pure function of (seed, frame index).
  const StreamSource again =
      ingest_frames(paths, kFrameFixtureRatio, kFrameFixtureSeed);
  for (std::size_t t = 0; t < source.slices.size(); ++t) {
    CHECK((source.slices[t].mask == again.slices[t].mask).all());
  }

  CHECK_THROWS_AS(ingest_frames({}, 0.5, 1), StructuralError);
  CHECK_THROWS_AS(ingest_frames(paths, 0.0, 1), StructuralError);
  const std::string odd = tmp("odd_size.pgm");
  spit(odd, std::string("P5\n1 1\n255\nx"));
  paths.push_back(odd);
  CHECK_THROWS_AS(ingest_frames(paths, 0.5, 1), StructuralError);
}

TEST_CASE("directory ingestion sorts frames and skips other files") {
  namespace fs = std::filesystem;
  const auto frames = fixture_pgm_frames();
  const std::string dir = tmp("frame_dir");
  fs::create_directories(dir);
  spit(dir + "/b.pgm", frames[1].bytes);
  spit(dir + "/a.pgm", frames[0].bytes);
  spit(dir + "/notes.txt", "not a frame");

  const StreamSource from_dir = ingest_frame_directory(dir, 0.5, 4);
  const StreamSource explicit_order =
      ingest_frames({dir + "/a.pgm", dir + "/b.pgm"}, 0.5, 4);
  REQUIRE(from_dir.slices.size() == 2);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK((from_dir.slices[t].values.array() ==
           explicit_order.slices[t].values.array()).all());
    CHECK((from_dir.slices[t].mask == explicit_order.slices[t].mask).all());
  }

  CHECK_THROWS_AS(ingest_frame_directory(dir + "/missing", 0.5, 1), IoError);
  const std::string empty_dir = tmp("empty_dir");
  fs::create_directories(empty_dir);
  CHECK_THROWS_AS(ingest_frame_directory(empty_dir, 0.5, 1),
                  StructuralError);
}

TEST_CASE("format_double round-trips and uses shortest digits") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 3.141592653589793,
                   -2.5e-308, 5e-324}) {
    // strtod instead of stod: stod throws on subnormals (ERANGE).
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("metrics csv matches the golden bytes") {
  MetricRun run;
  run.seed = 7;
  MetricRecord r;
  r.t = 0;
  r.residual = 0.5;
  r.running_avg = 0.5;
  r.wall_ms = 1.5;
  r.algo = "olstec";
  run.records.push_back(r);
  r.t = 1;
  r.residual = 0.25;
  r.running_avg = 0.375;
  r.wall_ms = 2.0;
  run.records.push_back(r);

  const std::string path = tmp("metrics.csv");
  write_metrics_csv(path, {run}, {{"algo", "olstec"}, {"rank", "5"}});
  CHECK(slurp(path) ==
        "# algo=olstec\n"
        "# rank=5\n"
        "t,residual,running_avg,wall_ms,algo,seed\n"
        "0,0.5,0.5,1.5,olstec,7\n"
        "1,0.25,0.375,2,olstec,7\n");

  run.records[0].algo = "has,comma";
  CHECK_THROWS_AS(write_metrics_csv(path, {run}, {}), StructuralError);
  CHECK_THROWS_AS(write_metrics_csv(path, {}, {{"a=b", "c"}}),
                  StructuralError);
  CHECK_THROWS_AS(write_metrics_csv(path, {}, {{"a", "x\ny"}}),
                  StructuralError);
  CHECK_THROWS_AS(write_metrics_csv("/nonexistent_dir_zz/m.csv", {}, {}),
                  IoError);
}

TEST_CASE("summary csv matches the golden bytes") {
  SummaryRow row;
  row.t = 3;
  row.algo = "sgd";
  row.residual_mean = 0.125;
  row.residual_std = 0.0;
  row.running_avg_mean = 1.0;
  row.running_avg_std = 0.0625;
  const std::string path = tmp("summary.csv");
  write_summary_csv(path, {row}, {});
  CHECK(slurp(path) ==
        "t,algo,residual_mean,residual_std,running_avg_mean,running_avg_std\n"
        "3,sgd,0.125,0,1,0.0625\n");
}
