#include "olstec/tracker.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <utility>

#include "olstec/rng.hpp"

namespace olstec {

namespace {

Matrix gaussian_factor(std::uint64_t seed, RngStream tag, Index n, int rank) {
  Rng rng = stream_rng(seed, tag, 0);
  Matrix m(n, rank);
  fill_gaussian(rng, m, 1.0 / std::sqrt(double(rank)));
  return m;
}

}  // namespace

Vector solve_slice_weights(const Matrix& row_factor, const Matrix& col_factor,
                           const MaskedSlice& slice, double regularization) {
  if (row_factor.rows() != slice.rows() || col_factor.rows() != slice.cols() ||
      row_factor.cols() != col_factor.cols()) {
    throw StructuralError("factor and slice dimensions disagree");
  }
  const Index rank = row_factor.cols();
  Matrix gram = regularization * Matrix::Identity(rank, rank);
  Vector rhs = Vector::Zero(rank);
  Vector g(rank);
  for (Index l = 0; l < slice.rows(); ++l) {
    for (Index w = 0; w < slice.cols(); ++w) {
      if (!slice.mask(l, w)) continue;
      g = row_factor.row(l).cwiseProduct(col_factor.row(w)).transpose();
      gram.noalias() += g * g.transpose();
      rhs.noalias() += slice.values(l, w) * g;
    }
  }
  if (!gram.allFinite() || !rhs.allFinite()) {
    throw SingularSystemError("non-finite weight normal equations",
                              slice.index);
  }
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularSystemError(
        "singular weight system; no observations and zero regularization",
        slice.index);
  }
  return llt.solve(rhs);
}

OlstecTracker::OlstecTracker(Index rows, Index cols,
                             const TrackerParams& params, std::uint64_t seed,
                             const Options& options)
    : params_(params),
      options_(options),
      prev_regularization_(params.regularization) {
  params_.validate();
  if (rows < 1 || cols < 1) {
    throw StructuralError("tracker dimensions must be positive");
  }
  model_.row_factor =
      gaussian_factor(seed, RngStream::tracker_row_init, rows, params_.rank);
  model_.col_factor =
      gaussian_factor(seed, RngStream::tracker_col_init, cols, params_.rank);
  model_.weights = Vector::Zero(params_.rank);
  const Matrix init_gram =
      (1.0 / params_.init_scale) * Matrix::Identity(params_.rank, params_.rank);
  row_gram_.assign(rows, init_gram);
  col_gram_.assign(cols, init_gram);
}

OlstecTracker::OlstecTracker(FactorModel initial, const TrackerParams& params,
                             const Options& options)
    : model_(std::move(initial)),
      params_(params),
      options_(options),
      prev_regularization_(params.regularization) {
  params_.validate();
  model_.validate();
  if (model_.rank() != params_.rank) {
    throw StructuralError("initial model rank does not match params");
  }
  model_.weights = Vector::Zero(params_.rank);
  const Matrix init_gram =
      (1.0 / params_.init_scale) * Matrix::Identity(params_.rank, params_.rank);
  row_gram_.assign(model_.rows(), init_gram);
  col_gram_.assign(model_.cols(), init_gram);
}

OlstecTracker::OlstecTracker(Index rows, Index cols,
                             const TrackerParams& params, std::uint64_t seed)
    : OlstecTracker(rows, cols, params, seed, Options()) {}

OlstecTracker::OlstecTracker(FactorModel initial, const TrackerParams& params)
    : OlstecTracker(std::move(initial), params, Options()) {}

void OlstecTracker::check_slice(const MaskedSlice& slice) const {
  if (slice.rows() != model_.rows() || slice.cols() != model_.cols()) {
    throw StructuralError("slice dimensions do not match tracker state");
  }
}

Vector OlstecTracker::solve_weights(const MaskedSlice& slice) const {
  check_slice(slice);
  return solve_slice_weights(model_.row_factor, model_.col_factor, slice,
                             params_.regularization);
}

void OlstecTracker::update_row_factors(const MaskedSlice& slice,
                                       const Vector& weights) {
  check_slice(slice);
  if (weights.size() != params_.rank || !weights.allFinite()) {
    throw StructuralError("weights must be finite and of tracker rank");
  }
  const Index rank = params_.rank;
  const double forgetting = params_.forgetting;
  const double ridge_step =
      params_.regularization - forgetting * prev_regularization_;
  // alpha.row(w) = weights .* col_factor.row(w)
  const Matrix alpha =
      (model_.col_factor.array().rowwise() * weights.transpose().array())
          .matrix();
  Vector row_old(rank), rhs(rank), updated(rank);
  Eigen::LLT<Matrix> llt(rank);
  for (Index l = 0; l < model_.rows(); ++l) {
    Matrix& gram = row_gram_[l];
    gram *= forgetting;
    gram.diagonal().array() += ridge_step;
    row_old = model_.row_factor.row(l).transpose();
    rhs = -ridge_step * row_old;
    for (Index w = 0; w < model_.cols(); ++w) {
      if (!slice.mask(l, w)) continue;
      gram.noalias() += alpha.row(w).transpose() * alpha.row(w);
      rhs.noalias() += (slice.values(l, w) - alpha.row(w).dot(row_old)) *
                       alpha.row(w).transpose();
    }
    gram = (0.5 * (gram + gram.transpose())).eval();
    if (!gram.allFinite()) {
      throw ConditioningError("non-finite row Gram matrix", 'r', l,
                              slice.index);
    }
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw ConditioningError("row Gram matrix is not positive definite", 'r',
                              l, slice.index);
    }
    updated = row_old + llt.solve(rhs);
    if (!updated.allFinite()) {
      throw ConditioningError("row update produced non-finite factors", 'r', l,
                              slice.index);
    }
    model_.row_factor.row(l) = updated.transpose();
  }
}

void OlstecTracker::update_col_factors(const MaskedSlice& slice,
                                       const Vector& weights,
                                       const Matrix& row_factor_before) {
  check_slice(slice);
  if (weights.size() != params_.rank || !weights.allFinite()) {
    throw StructuralError("weights must be finite and of tracker rank");
  }
  if (row_factor_before.rows() != model_.rows() ||
      row_factor_before.cols() != params_.rank) {
    throw StructuralError("row factor snapshot has wrong dimensions");
  }
  const Index rank = params_.rank;
  const double forgetting = params_.forgetting;
  const double ridge_step =
      params_.regularization - forgetting * prev_regularization_;
  // beta.row(l) = weights .* row_factor.row(l)
  const Matrix beta =
      (row_factor_before.array().rowwise() * weights.transpose().array())
          .matrix();
  Vector col_old(rank), rhs(rank), updated(rank);
  Eigen::LLT<Matrix> llt(rank);
  for (Index w = 0; w < model_.cols(); ++w) {
    Matrix& gram = col_gram_[w];
    gram *= forgetting;
    gram.diagonal().array() += ridge_step;
    col_old = model_.col_factor.row(w).transpose();
    rhs = -ridge_step * col_old;
    for (Index l = 0; l < model_.rows(); ++l) {
      if (!slice.mask(l, w)) continue;
      gram.noalias() += beta.row(l).transpose() * beta.row(l);
      rhs.noalias() += (slice.values(l, w) - beta.row(l).dot(col_old)) *
                       beta.row(l).transpose();
    }
    gram = (0.5 * (gram + gram.transpose())).eval();
    if (!gram.allFinite()) {
      throw ConditioningError("non-finite column Gram matrix", 'c', w,
                              slice.index);
    }
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw ConditioningError("column Gram matrix is not positive definite",
                              'c', w, slice.index);
    }
    updated = col_old + llt.solve(rhs);
    if (!updated.allFinite()) {
      throw ConditioningError("column update produced non-finite factors", 'c',
                              w, slice.index);
    }
    model_.col_factor.row(w) = updated.transpose();
  }
}

TrackStep OlstecTracker::step(const MaskedSlice& slice) {
  check_slice(slice);
  Vector weights = solve_weights(slice);
  Matrix estimate = model_.row_factor * weights.asDiagonal() *
                    model_.col_factor.transpose();

  const Matrix row_before = model_.row_factor;
  const Matrix col_before = model_.col_factor;
  const std::vector<Matrix> row_gram_before = row_gram_;
  const std::vector<Matrix> col_gram_before = col_gram_;
  try {
    update_row_factors(slice, weights);
    update_col_factors(slice, weights,
                       options_.col_uses_updated_row_factor
                           ? model_.row_factor
                           : row_before);
  } catch (...) {
    model_.row_factor = row_before;
    model_.col_factor = col_before;
    row_gram_ = row_gram_before;
    col_gram_ = col_gram_before;
    throw;
  }
  model_.weights = weights;
  prev_regularization_ = params_.regularization;
  ++steps_;
  if (options_.post_update_estimate) {
    estimate = model_.row_factor * weights.asDiagonal() *
               model_.col_factor.transpose();
  }
  return {std::move(estimate), std::move(weights)};
}

std::size_t OlstecTracker::state_bytes() const {
  std::size_t doubles = static_cast<std::size_t>(model_.row_factor.size()) +
                        static_cast<std::size_t>(model_.col_factor.size()) +
                        static_cast<std::size_t>(model_.weights.size());
  for (const Matrix& g : row_gram_) doubles += static_cast<std::size_t>(g.size());
  for (const Matrix& g : col_gram_) doubles += static_cast<std::size_t>(g.size());
  return doubles * sizeof(double);
}

}  // namespace olstec
