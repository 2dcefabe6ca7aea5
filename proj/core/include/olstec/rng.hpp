#pragma once

// Deterministic seeded randomness for generators, tracker initialization, and
// fixtures. Scheme "splitmix64-bm-v1": splitmix64 streams addressed by
// (seed, tag, counter), uniforms from the top 53 bits, normals via
// Box-Muller with the second member of each pair cached. Generated streams
// and committed fixtures depend on this exact scheme; any change to the
// mixing, key derivation, scaling, or draw order is a breaking format change.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace olstec {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent substream addressed by (seed, keys...).
  static Rng keyed(std::uint64_t seed,
                   std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = seed;
    for (std::uint64_t k : keys) {
      s = scramble(s + 0x9e3779b97f4a7c15ULL * (k + 1));
    }
    return Rng(s);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal draw.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = double(next_u64() >> 11) * 0x1.0p-53;        // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t scramble(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Substream tags. The numeric values are part of the format.
enum class RngStream : std::uint64_t {
  truth_row_factor = 1,
  truth_col_factor = 2,
  slice_weights = 3,
  mask = 4,
  noise = 5,
  tracker_row_init = 6,
  tracker_col_init = 7,
  batch_row_init = 8,
  batch_col_init = 9,
};

inline Rng stream_rng(std::uint64_t seed, RngStream tag,
                      std::uint64_t counter) {
  return Rng::keyed(seed, {static_cast<std::uint64_t>(tag), counter});
}

/// Fills row-major; one generator per matrix keeps draws addressable.
inline void fill_gaussian(Rng& rng, Eigen::MatrixXd& m, double scale = 1.0) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = scale * rng.gaussian();
    }
  }
}

inline void fill_gaussian(Rng& rng, Eigen::VectorXd& v, double scale = 1.0) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = scale * rng.gaussian();
  }
}

}  // namespace olstec
