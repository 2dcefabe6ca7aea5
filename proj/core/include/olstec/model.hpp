#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "olstec/errors.hpp"

namespace olstec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Rank-R CP model of one slice:
///   estimate = row_factor * diag(weights) * col_factor^T.
struct FactorModel {
  Matrix row_factor;  // L x R
  Matrix col_factor;  // W x R
  Vector weights;     // R

  Index rows() const { return row_factor.rows(); }
  Index cols() const { return col_factor.rows(); }
  Index rank() const { return weights.size(); }

  bool all_finite() const;
  void validate() const;  // throws StructuralError on inconsistent shapes
};

/// Exact bilinear reconstruction, no masking applied.
Matrix reconstruct_slice(const FactorModel& model);

/// One partially observed slice. Unobserved entries of `values` are exactly
/// zero; `index` is the position of the slice in its stream.
struct MaskedSlice {
  Matrix values;   // L x W
  MaskArray mask;  // true = observed
  std::int64_t index = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  Index observed_count() const { return mask.count(); }

  void validate() const;
};

/// Builds a slice from raw values, zeroing unobserved positions.
MaskedSlice make_masked_slice(Matrix values, MaskArray mask,
                              std::int64_t index = 0);

/// Sum of squared errors over observed entries only.
double masked_residual(const MaskedSlice& slice, const Matrix& estimate);

struct TrackerParams {
  double forgetting = 0.88;      // exponential weight on past slices, in (0, 1]
  double regularization = 1e-9;  // ridge weight, >= 0, constant over time
  double init_scale = 100.0;     // Gram matrices start at (1/init_scale) * I
  int rank = 5;

  void validate() const;
};

/// Result of one tracker step: the estimate formed from the factors as they
/// stood when the slice arrived, and the weights solved for it.
struct TrackStep {
  Matrix estimate;  // L x W
  Vector weights;   // R
};

/// A finite stream held in memory, with optional per-slice ground truth.
struct StreamSource {
  std::vector<MaskedSlice> slices;
  std::vector<Matrix> truth;  // empty, or one matrix per slice

  bool has_truth() const { return !truth.empty(); }
  std::int64_t size() const { return static_cast<std::int64_t>(slices.size()); }
  Index rows() const { return slices.empty() ? 0 : slices.front().rows(); }
  Index cols() const { return slices.empty() ? 0 : slices.front().cols(); }

  void validate() const;
};

}  // namespace olstec
