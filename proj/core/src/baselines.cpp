#include "olstec/baselines.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>
#include <utility>

#include "olstec/errors.hpp"
#include "olstec/rng.hpp"
#include "olstec/tracker.hpp"

namespace olstec {

namespace {

Matrix gaussian_factor(std::uint64_t seed, RngStream tag, Index n, int rank) {
  Rng rng = stream_rng(seed, tag, 0);
  Matrix m(n, rank);
  fill_gaussian(rng, m, 1.0 / std::sqrt(double(rank)));
  return m;
}

void check_options(const SgdTracker::Options& options) {
  if (!(options.step_size >= 0.0) || !std::isfinite(options.step_size)) {
    throw StructuralError("sgd step size must be finite and non-negative");
  }
  if (!(options.decay >= 0.0) || !std::isfinite(options.decay)) {
    throw StructuralError("sgd decay must be finite and non-negative");
  }
  if (!(options.regularization >= 0.0) ||
      !std::isfinite(options.regularization)) {
    throw StructuralError("sgd regularization must be finite and non-negative");
  }
}

}  // namespace

double slice_objective(const FactorModel& model, const MaskedSlice& slice,
                       double regularization) {
  model.validate();
  slice.validate();
  if (slice.rows() != model.rows() || slice.cols() != model.cols()) {
    throw StructuralError("slice dimensions do not match model");
  }
  const Matrix estimate = reconstruct_slice(model);
  double data = 0.0;
  for (Index l = 0; l < slice.rows(); ++l) {
    for (Index w = 0; w < slice.cols(); ++w) {
      if (!slice.mask(l, w)) continue;
      const double d = slice.values(l, w) - estimate(l, w);
      data += d * d;
    }
  }
  const double penalty = model.row_factor.squaredNorm() +
                         model.col_factor.squaredNorm();
  return 0.5 * data + 0.5 * regularization * penalty;
}

SliceGradients slice_gradients(const FactorModel& model,
                               const MaskedSlice& slice,
                               double regularization) {
  model.validate();
  slice.validate();
  if (slice.rows() != model.rows() || slice.cols() != model.cols()) {
    throw StructuralError("slice dimensions do not match model");
  }
  const Matrix estimate = reconstruct_slice(model);
  // Masked misfit, estimate minus data, so the gradient needs no sign flip.
  Matrix misfit = Matrix::Zero(slice.rows(), slice.cols());
  for (Index l = 0; l < slice.rows(); ++l) {
    for (Index w = 0; w < slice.cols(); ++w) {
      if (slice.mask(l, w)) misfit(l, w) = estimate(l, w) - slice.values(l, w);
    }
  }
  SliceGradients g;
  g.row = misfit * model.col_factor * model.weights.asDiagonal() +
          regularization * model.row_factor;
  g.col = misfit.transpose() * model.row_factor * model.weights.asDiagonal() +
          regularization * model.col_factor;
  return g;
}

SgdTracker::SgdTracker(Index rows, Index cols, int rank, std::uint64_t seed,
                       const Options& options)
    : options_(options) {
  check_options(options_);
  if (rows < 1 || cols < 1 || rank < 1) {
    throw StructuralError("tracker dimensions must be positive");
  }
  model_.row_factor =
      gaussian_factor(seed, RngStream::tracker_row_init, rows, rank);
  model_.col_factor =
      gaussian_factor(seed, RngStream::tracker_col_init, cols, rank);
  model_.weights = Vector::Zero(rank);
}

SgdTracker::SgdTracker(FactorModel initial, const Options& options)
    : model_(std::move(initial)), options_(options) {
  check_options(options_);
  model_.validate();
}

SgdTracker::SgdTracker(Index rows, Index cols, int rank, std::uint64_t seed)
    : SgdTracker(rows, cols, rank, seed, Options()) {}

SgdTracker::SgdTracker(FactorModel initial)
    : SgdTracker(std::move(initial), Options()) {}

TrackStep SgdTracker::step(const MaskedSlice& slice) {
  slice.validate();
  if (slice.rows() != model_.rows() || slice.cols() != model_.cols()) {
    throw StructuralError("slice dimensions do not match tracker");
  }
  const Vector weights = solve_slice_weights(
      model_.row_factor, model_.col_factor, slice, options_.regularization);

  TrackStep result;
  result.estimate = model_.row_factor * weights.asDiagonal() *
                    model_.col_factor.transpose();
  result.weights = weights;

  FactorModel probe = model_;
  probe.weights = weights;
  const SliceGradients grads =
      slice_gradients(probe, slice, options_.regularization);
  const double eta =
      options_.step_size / std::pow(double(steps_ + 1), options_.decay);
  Matrix row_next = model_.row_factor - eta * grads.row;
  Matrix col_next = model_.col_factor - eta * grads.col;
  if (!row_next.allFinite() || !col_next.allFinite() ||
      row_next.norm() > kDivergenceLimit ||
      col_next.norm() > kDivergenceLimit) {
    throw DivergenceError("sgd factors diverged at slice " +
                          std::to_string(slice.index));
  }
  model_.row_factor = std::move(row_next);
  model_.col_factor = std::move(col_next);
  model_.weights = weights;
  ++steps_;
  return result;
}

namespace {

double batch_objective(const BatchProblem& problem, const Matrix& row_factor,
                       const Matrix& col_factor, const Matrix& slice_weights) {
  double data = 0.0;
  for (std::size_t t = 0; t < problem.slices.size(); ++t) {
    const MaskedSlice& slice = problem.slices[t];
    const Matrix estimate = row_factor *
                            slice_weights.row(Index(t)).asDiagonal() *
                            col_factor.transpose();
    for (Index l = 0; l < slice.rows(); ++l) {
      for (Index w = 0; w < slice.cols(); ++w) {
        if (!slice.mask(l, w)) continue;
        const double d = slice.values(l, w) - estimate(l, w);
        data += d * d;
      }
    }
  }
  const double penalty = row_factor.squaredNorm() + col_factor.squaredNorm() +
                         slice_weights.squaredNorm();
  return 0.5 * data + problem.regularization * penalty;
}

// Exact minimizer over one factor's rows with the other quantities fixed.
// Each observed entry contributes one rank-one term to the row's normal
// equations; the ridge term is 2 mu because the penalty is mu ||.||^2 with
// no 1/2 in front.
void solve_factor_rows(const BatchProblem& problem, bool row_mode,
                       const Matrix& fixed_factor, const Matrix& slice_weights,
                       Matrix* out) {
  const int rank = problem.rank;
  const Index n = out->rows();
  const Matrix ridge = 2.0 * problem.regularization *
                       Matrix::Identity(rank, rank);
  std::vector<Matrix> gram(std::size_t(n), ridge);
  std::vector<Vector> rhs(std::size_t(n), Vector::Zero(rank));
  Matrix scaled;
  for (std::size_t t = 0; t < problem.slices.size(); ++t) {
    const MaskedSlice& slice = problem.slices[t];
    scaled = (fixed_factor.array().rowwise() *
              slice_weights.row(Index(t)).array())
                 .matrix();
    for (Index l = 0; l < slice.rows(); ++l) {
      for (Index w = 0; w < slice.cols(); ++w) {
        if (!slice.mask(l, w)) continue;
        const Index target = row_mode ? l : w;
        const Index other = row_mode ? w : l;
        gram[std::size_t(target)].noalias() +=
            scaled.row(other).transpose() * scaled.row(other);
        rhs[std::size_t(target)].noalias() +=
            slice.values(l, w) * scaled.row(other).transpose();
      }
    }
  }
  Eigen::LLT<Matrix> llt;
  for (Index i = 0; i < n; ++i) {
    llt.compute(gram[std::size_t(i)]);
    if (llt.info() != Eigen::Success) {
      throw SingularSystemError("batch factor system is not positive definite");
    }
    out->row(i) = llt.solve(rhs[std::size_t(i)]).transpose();
  }
}

}  // namespace

BatchResult batch_als(const BatchProblem& problem, std::uint64_t seed) {
  if (problem.slices.empty()) {
    throw StructuralError("batch problem needs at least one slice");
  }
  if (problem.rank < 1) {
    throw StructuralError("batch rank must be positive");
  }
  if (!(problem.regularization >= 0.0)) {
    throw StructuralError("batch regularization must be non-negative");
  }
  if (problem.max_iterations < 1) {
    throw StructuralError("batch iteration budget must be positive");
  }
  const Index rows = problem.slices.front().rows();
  const Index cols = problem.slices.front().cols();
  for (const MaskedSlice& slice : problem.slices) {
    slice.validate();
    if (slice.rows() != rows || slice.cols() != cols) {
      throw StructuralError("batch slices must share dimensions");
    }
  }

  BatchResult result;
  result.row_factor =
      gaussian_factor(seed, RngStream::batch_row_init, rows, problem.rank);
  result.col_factor =
      gaussian_factor(seed, RngStream::batch_col_init, cols, problem.rank);
  result.slice_weights =
      Matrix::Zero(Index(problem.slices.size()), problem.rank);

  result.objective_trace.push_back(batch_objective(
      problem, result.row_factor, result.col_factor, result.slice_weights));

  for (int sweep = 0; sweep < problem.max_iterations; ++sweep) {
    for (std::size_t t = 0; t < problem.slices.size(); ++t) {
      result.slice_weights.row(Index(t)) =
          solve_slice_weights(result.row_factor, result.col_factor,
                              problem.slices[t],
                              2.0 * problem.regularization)
              .transpose();
    }
    solve_factor_rows(problem, true, result.col_factor, result.slice_weights,
                      &result.row_factor);
    solve_factor_rows(problem, false, result.row_factor, result.slice_weights,
                      &result.col_factor);
    const double previous = result.objective_trace.back();
    const double current = batch_objective(
        problem, result.row_factor, result.col_factor, result.slice_weights);
    result.objective_trace.push_back(current);
    if (std::abs(previous - current) <=
        problem.tolerance * std::max(1.0, std::abs(previous))) {
      break;
    }
  }
  return result;
}

}  // namespace olstec
