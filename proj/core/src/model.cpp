#include "olstec/model.hpp"

namespace olstec {

bool FactorModel::all_finite() const {
  return row_factor.allFinite() && col_factor.allFinite() &&
         weights.allFinite();
}

void FactorModel::validate() const {
  if (row_factor.rows() < 1 || col_factor.rows() < 1 || weights.size() < 1) {
    throw StructuralError("factor model dimensions must be positive");
  }
  if (row_factor.cols() != weights.size() ||
      col_factor.cols() != weights.size()) {
    throw StructuralError(
        "factor model rank mismatch: row factor " +
        std::to_string(row_factor.cols()) + ", col factor " +
        std::to_string(col_factor.cols()) + ", weights " +
        std::to_string(weights.size()));
  }
}

Matrix reconstruct_slice(const FactorModel& model) {
  model.validate();
  return model.row_factor * model.weights.asDiagonal() *
         model.col_factor.transpose();
}

void MaskedSlice::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw StructuralError("slice dimensions must be positive");
  }
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw StructuralError("slice values and mask dimensions disagree");
  }
  if (index < 0) {
    throw StructuralError("slice index must be nonnegative");
  }
  for (Index l = 0; l < values.rows(); ++l) {
    for (Index w = 0; w < values.cols(); ++w) {
      if (!mask(l, w) && values(l, w) != 0.0) {
        throw StructuralError("unobserved slice entries must be exactly zero");
      }
    }
  }
}

MaskedSlice make_masked_slice(Matrix values, MaskArray mask,
                              std::int64_t index) {
  MaskedSlice slice{std::move(values), std::move(mask), index};
  if (slice.values.rows() != slice.mask.rows() ||
      slice.values.cols() != slice.mask.cols()) {
    throw StructuralError("slice values and mask dimensions disagree");
  }
  slice.values = slice.mask.select(slice.values, Matrix::Zero(
      slice.values.rows(), slice.values.cols()));
  slice.validate();
  return slice;
}

double masked_residual(const MaskedSlice& slice, const Matrix& estimate) {
  if (slice.rows() != estimate.rows() || slice.cols() != estimate.cols()) {
    throw StructuralError("slice and estimate dimensions disagree");
  }
  double sum = 0.0;
  for (Index l = 0; l < slice.rows(); ++l) {
    for (Index w = 0; w < slice.cols(); ++w) {
      if (!slice.mask(l, w)) continue;
      const double d = slice.values(l, w) - estimate(l, w);
      sum += d * d;
    }
  }
  return sum;
}

void TrackerParams::validate() const {
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw StructuralError("forgetting must lie in (0, 1]");
  }
  if (!(regularization >= 0.0)) {
    throw StructuralError("regularization must be nonnegative");
  }
  if (!(init_scale > 0.0)) {
    throw StructuralError("init_scale must be positive");
  }
  if (rank < 1) {
    throw StructuralError("rank must be positive");
  }
}

void StreamSource::validate() const {
  if (!truth.empty() && truth.size() != slices.size()) {
    throw StructuralError("truth count does not match slice count");
  }
  for (std::size_t i = 0; i < slices.size(); ++i) {
    slices[i].validate();
    if (slices[i].rows() != rows() || slices[i].cols() != cols()) {
      throw StructuralError("slices disagree on dimensions");
    }
    if (!truth.empty() && (truth[i].rows() != rows() ||
                           truth[i].cols() != cols())) {
      throw StructuralError("truth slice dimensions disagree");
    }
  }
}

}  // namespace olstec
