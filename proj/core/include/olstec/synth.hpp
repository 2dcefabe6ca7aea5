#pragma once

#include <cstdint>
#include <vector>

#include "olstec/model.hpp"

namespace olstec {

enum class ScenarioMode { stationary, dynamic };

/// One stretch of slices in a dynamic scenario. When fresh_factors is false
/// the segment keeps the previous segment's ground-truth factors.
struct Segment {
  Index length = 0;
  bool fresh_factors = true;
};

struct ScenarioSpec {
  ScenarioMode mode = ScenarioMode::stationary;
  Index rows = 100;             // L
  Index cols = 100;             // W
  Index length = 1000;          // T
  int rank = 5;                 // R
  double noise = 1e-3;          // sigma of additive Gaussian noise
  double observe_ratio = 0.1;   // Bernoulli observation probability
  std::vector<Segment> segments;  // dynamic mode only; lengths sum to T
  std::uint64_t seed = 0;
  bool fixed_mask = false;  // reuse slice 0's mask for every slice
  // Dynamic mode only: blend ground-truth factors linearly from the previous
  // segment's over this many slices after each fresh draw, instead of
  // switching abruptly. 0 keeps the abrupt switch.
  Index drift_window = 0;

  void validate() const;
};

/// Deterministic random-access view of a synthetic scenario. Slices are
/// recomputed on demand from the counter-based generator, so streaming a long
/// scenario to disk never materializes the full tensor.
class SyntheticStream {
 public:
  explicit SyntheticStream(ScenarioSpec spec);

  Index size() const { return spec_.length; }
  Index rows() const { return spec_.rows; }
  Index cols() const { return spec_.cols; }
  const ScenarioSpec& spec() const { return spec_; }

  /// Noiseless ground-truth slice t.
  Matrix truth(Index t) const;
  /// Observed slice t: truth plus noise, masked, unobserved entries zero.
  MaskedSlice slice(Index t) const;

 private:
  void truth_factors(Index t, Matrix* row, Matrix* col) const;

  ScenarioSpec spec_;
  std::vector<Index> segment_start_;       // one per segment
  std::vector<std::size_t> segment_epoch_;  // factor draw used by each segment
  std::vector<Matrix> epoch_row_factors_;
  std::vector<Matrix> epoch_col_factors_;
};

/// Materialized stationary scenario: one factor pair for the whole stream.
StreamSource gen_stationary(const ScenarioSpec& spec);

/// Materialized dynamic scenario: per-segment factor draws concatenated along
/// the third mode.
StreamSource gen_dynamic(const ScenarioSpec& spec);

/// Standalone i.i.d. Bernoulli mask, bit-identical for equal arguments.
MaskArray gen_mask(Index rows, Index cols, double observe_ratio,
                   std::uint64_t seed);

}  // namespace olstec
