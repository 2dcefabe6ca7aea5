#pragma once

// Builders for the committed regression fixtures under tests/fixtures/.
// gen_fixtures rebuilds the files from these; the tests rebuild the same
// data in memory and compare against the committed bytes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "olstec/metrics.hpp"
#include "olstec/rng.hpp"

namespace testing_support {

// Five runs per algorithm tag, eight slices each; the numbers come from the
// keyed generator so the table is stable by construction.
inline std::vector<std::vector<olstec::MetricRecord>> fixture_metric_runs() {
  std::vector<std::vector<olstec::MetricRecord>> runs;
  const char* algos[] = {"olstec", "sgd"};
  for (std::uint64_t a = 0; a < 2; ++a) {
    for (std::uint64_t run = 0; run < 5; ++run) {
      olstec::Rng rng = olstec::Rng::keyed(77, {a, run});
      std::vector<olstec::MetricRecord> records;
      double sum = 0.0;
      for (olstec::Index t = 0; t < 8; ++t) {
        olstec::MetricRecord r;
        r.t = t;
        r.residual = rng.uniform();
        sum += r.residual;
        r.running_avg = sum / double(t + 1);
        r.wall_ms = 0.0;
        r.algo = algos[a];
        records.push_back(std::move(r));
      }
      runs.push_back(std::move(records));
    }
  }
  return runs;
}

inline std::vector<std::pair<std::string, std::string>> fixture_metadata() {
  return {{"format", "summary"}, {"source", "regression fixture"}};
}

// Two deterministic grayscale frames; the second carries a comment line and
// a non-default maxval to exercise the parser.
struct RawFile {
  std::string name;
  std::string bytes;
};

inline std::vector<RawFile> fixture_pgm_frames() {
  std::vector<RawFile> files;
  {
    std::ostringstream out;
    out << "P5\n5 6\n255\n";
    for (int k = 0; k < 30; ++k) out.put(char((k * 37 + 11) % 256));
    files.push_back({"frame_000.pgm", out.str()});
  }
  {
    std::ostringstream out;
    out << "P5\n# second synthetic frame\n5 6\n200\n";
    for (int k = 0; k < 30; ++k) out.put(char((k * 53 + 7) % 201));
    files.push_back({"frame_001.pgm", out.str()});
  }
  return files;
}

inline constexpr double kFrameFixtureRatio = 0.5;
inline constexpr std::uint64_t kFrameFixtureSeed = 9;

inline std::string unit_temp_path(const std::string& unit,
                                  const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "olstec_tests" /
                   unit;
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace testing_support
