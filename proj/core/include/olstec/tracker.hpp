#pragma once

#include <cstdint>
#include <vector>

#include "olstec/model.hpp"

namespace olstec {

/// Closed-form ridge solve for the slice weight vector:
///   (mu I + sum_{(l,w) observed} g g^T) b = sum_{(l,w) observed} Y(l,w) g,
/// with g = row_factor.row(l) .* col_factor.row(w). Solved as an SPD system,
/// never by explicit inversion. Throws SingularSystemError when the system
/// cannot be factorized (empty mask with mu = 0, or non-finite data).
Vector solve_slice_weights(const Matrix& row_factor, const Matrix& col_factor,
                           const MaskedSlice& slice, double regularization);

/// Online second-order tracker for partially observed slice streams.
///
/// Each step solves the slice weights in closed form, reports the estimate
/// built from the factors as they stood when the slice arrived, then refreshes
/// every factor row with an exponentially discounted recursive least-squares
/// update against its own R x R Gram matrix:
///
///   G_l <- forgetting * G_l + sum_{w observed} alpha_w alpha_w^T + d * I
///   a_l <- a_l + G_l^{-1} [ -d * a_l + sum_{w observed} (Y(l,w) - alpha_w . a_l) alpha_w ]
///
/// with alpha_w = weights .* col_factor.row(w) and
/// d = regularization - forgetting * previous regularization. Column updates
/// mirror this with the roles of the factors swapped. Gram matrices are kept
/// (not their inverses) and re-symmetrized after every update; each row is an
/// independent subproblem, so update order cannot change the result.
class OlstecTracker {
 public:
  struct Options {
    // Column updates read the row factor from before this step by default;
    // set to true to read the freshly updated one instead.
    bool col_uses_updated_row_factor = false;
    // Report the estimate rebuilt from post-update factors (diagnostics).
    bool post_update_estimate = false;
  };

  /// Random initialization: factors filled with standard Gaussian entries
  /// scaled by 1/sqrt(rank), weights zero, Gram matrices (1/init_scale) * I.
  OlstecTracker(Index rows, Index cols, const TrackerParams& params,
                std::uint64_t seed, const Options& options);
  OlstecTracker(Index rows, Index cols, const TrackerParams& params,
                std::uint64_t seed);

  /// Warm start from explicit factors (weights are reset to zero).
  OlstecTracker(FactorModel initial, const TrackerParams& params,
                const Options& options);
  OlstecTracker(FactorModel initial, const TrackerParams& params);

  /// Processes one slice. Transactional: on error the state is unchanged.
  TrackStep step(const MaskedSlice& slice);

  Vector solve_weights(const MaskedSlice& slice) const;
  void update_row_factors(const MaskedSlice& slice, const Vector& weights);
  void update_col_factors(const MaskedSlice& slice, const Vector& weights,
                          const Matrix& row_factor_before);

  const FactorModel& model() const { return model_; }
  const std::vector<Matrix>& row_gram() const { return row_gram_; }
  const std::vector<Matrix>& col_gram() const { return col_gram_; }
  std::int64_t steps_taken() const { return steps_; }
  const TrackerParams& params() const { return params_; }
  const Options& options() const { return options_; }

  /// Bytes held in factors and Gram matrices; grows as (L + W) R^2.
  std::size_t state_bytes() const;

 private:
  void check_slice(const MaskedSlice& slice) const;

  FactorModel model_;
  std::vector<Matrix> row_gram_;  // one R x R matrix per row
  std::vector<Matrix> col_gram_;  // one R x R matrix per column
  TrackerParams params_;
  Options options_;
  std::int64_t steps_ = 0;
  double prev_regularization_;
};

}  // namespace olstec
