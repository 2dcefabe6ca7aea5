#pragma once

#include <cstdint>
#include <vector>

#include "olstec/model.hpp"
#include "olstec/rng.hpp"
#include "olstec/tracker.hpp"
#include "support/oracles.hpp"

namespace testing_support {

using olstec::Index;
using olstec::MaskedSlice;
using olstec::Matrix;
using olstec::Vector;

inline Matrix random_matrix(std::uint64_t seed, std::uint64_t counter,
                            Index rows, Index cols, double scale = 1.0) {
  olstec::Rng rng = olstec::Rng::keyed(seed, {0xabcdULL, counter});
  Matrix m(rows, cols);
  olstec::fill_gaussian(rng, m, scale);
  return m;
}

inline Vector random_vector(std::uint64_t seed, std::uint64_t counter,
                            Index n, double scale = 1.0) {
  olstec::Rng rng = olstec::Rng::keyed(seed, {0xdcbaULL, counter});
  Vector v(n);
  olstec::fill_gaussian(rng, v, scale);
  return v;
}

inline olstec::MaskArray random_mask(std::uint64_t seed, std::uint64_t counter,
                                     Index rows, Index cols, double rho) {
  olstec::Rng rng = olstec::Rng::keyed(seed, {0x5a5aULL, counter});
  olstec::MaskArray mask(rows, cols);
  for (Index l = 0; l < rows; ++l) {
    for (Index w = 0; w < cols; ++w) {
      mask(l, w) = rng.bernoulli(rho);
    }
  }
  return mask;
}

/// Random low-rank slice with optional noise, plus its mask.
inline MaskedSlice random_low_rank_slice(std::uint64_t seed,
                                         std::uint64_t counter, Index rows,
                                         Index cols, int rank, double rho,
                                         double noise = 0.0,
                                         Index index = 0) {
  const Matrix a = random_matrix(seed, 1000 + counter, rows, rank);
  const Matrix c = random_matrix(seed, 2000 + counter, cols, rank);
  const Vector b = random_vector(seed, 3000 + counter, rank);
  Matrix values = a * b.asDiagonal() * c.transpose();
  if (noise > 0.0) {
    values += random_matrix(seed, 4000 + counter, rows, cols, noise);
  }
  return olstec::make_masked_slice(
      values, random_mask(seed, 5000 + counter, rows, cols, rho), index);
}

/// Runs the tracker over the slices while recording the factor history the
/// definitional oracles need.
inline oracles::TrackerHistory run_with_history(
    olstec::OlstecTracker& tracker, const std::vector<MaskedSlice>& slices) {
  oracles::TrackerHistory history;
  history.forgetting = tracker.params().forgetting;
  history.regularization = tracker.params().regularization;
  history.init_scale = tracker.params().init_scale;
  history.row_factors.push_back(tracker.model().row_factor);
  history.col_factors.push_back(tracker.model().col_factor);
  for (const MaskedSlice& slice : slices) {
    const olstec::TrackStep step = tracker.step(slice);
    history.row_factors.push_back(tracker.model().row_factor);
    history.col_factors.push_back(tracker.model().col_factor);
    history.weights.push_back(step.weights);
    history.slices.push_back(slice);
  }
  return history;
}

}  // namespace testing_support
