#pragma once

#include <cstdint>
#include <vector>

#include "olstec/model.hpp"

namespace olstec {

/// Objective the gradient tracker descends for one slice, at fixed weights:
///   0.5 ||mask .* (Y - estimate)||_F^2
///     + 0.5 mu (||row_factor||_F^2 + ||col_factor||_F^2).
double slice_objective(const FactorModel& model, const MaskedSlice& slice,
                       double regularization);

struct SliceGradients {
  Matrix row;  // d objective / d row_factor
  Matrix col;  // d objective / d col_factor
};

/// Exact gradients of slice_objective in both factors.
SliceGradients slice_gradients(const FactorModel& model,
                               const MaskedSlice& slice,
                               double regularization);

/// First-order comparison tracker: the same closed-form weight solve as the
/// second-order tracker, followed by a single gradient step on both factors
/// with step size step_size / t^decay. Deliberately simple; it is the "SGD
/// baseline" in metric outputs, not a reimplementation of any published
/// algorithm.
class SgdTracker {
 public:
  struct Options {
    double step_size = 0.1;  // grid-selected over {0.1, 1, 10}, see README
    double decay = 0.5;
    double regularization = 1e-9;
  };

  SgdTracker(Index rows, Index cols, int rank, std::uint64_t seed,
             const Options& options);
  SgdTracker(Index rows, Index cols, int rank, std::uint64_t seed);
  SgdTracker(FactorModel initial, const Options& options);
  explicit SgdTracker(FactorModel initial);

  TrackStep step(const MaskedSlice& slice);

  const FactorModel& model() const { return model_; }
  std::int64_t steps_taken() const { return steps_; }
  const Options& options() const { return options_; }

  static constexpr double kDivergenceLimit = 1e6;

 private:
  FactorModel model_;
  Options options_;
  std::int64_t steps_ = 0;
};

/// Batch weighted-ALS problem over a finite stream, used as a verification
/// oracle and lower-bound reference:
///   min 0.5 sum_t ||mask_t .* (Y_t - A diag(b_t) C^T)||_F^2
///       + mu (||A||_F^2 + ||B||_F^2 + ||C||_F^2).
struct BatchProblem {
  std::vector<MaskedSlice> slices;
  int rank = 5;
  double regularization = 1e-9;
  int max_iterations = 300;
  double tolerance = 1e-9;  // relative objective change
};

struct BatchResult {
  Matrix row_factor;                    // L x R
  Matrix col_factor;                    // W x R
  Matrix slice_weights;                 // T x R, row t = b_t
  std::vector<double> objective_trace;  // initial value, then one per sweep
};

/// Alternating exact ridge solves over slice weights, row-factor rows, and
/// col-factor rows until the relative objective change drops below tolerance.
/// The objective trace is non-increasing.
BatchResult batch_als(const BatchProblem& problem, std::uint64_t seed);

}  // namespace olstec
