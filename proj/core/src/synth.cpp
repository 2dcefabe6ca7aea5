#include "olstec/synth.hpp"

#include <cmath>
#include <utility>

#include "olstec/errors.hpp"
#include "olstec/rng.hpp"

namespace olstec {

void ScenarioSpec::validate() const {
  if (rows < 1 || cols < 1 || length < 1) {
    throw StructuralError("scenario dimensions must be positive");
  }
  if (rank < 1) {
    throw StructuralError("scenario rank must be positive");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw StructuralError("scenario noise must be finite and non-negative");
  }
  if (!(observe_ratio > 0.0) || !(observe_ratio <= 1.0)) {
    throw StructuralError("observe ratio must lie in (0, 1]");
  }
  if (mode == ScenarioMode::stationary) {
    if (!segments.empty()) {
      throw StructuralError("stationary scenarios take no segments");
    }
    if (drift_window != 0) {
      throw StructuralError("drift applies to dynamic scenarios only");
    }
    return;
  }
  if (segments.empty()) {
    throw StructuralError("dynamic scenarios need at least one segment");
  }
  Index total = 0;
  for (const Segment& segment : segments) {
    if (segment.length < 1) {
      throw StructuralError("segment lengths must be positive");
    }
    if (drift_window > 0 && drift_window > segment.length) {
      throw StructuralError("drift window exceeds a segment length");
    }
    total += segment.length;
  }
  if (total != length) {
    throw StructuralError("segment lengths must sum to the stream length");
  }
  if (drift_window < 0) {
    throw StructuralError("drift window must be non-negative");
  }
}

namespace {

Matrix draw_factor(std::uint64_t seed, RngStream tag, std::uint64_t counter,
                   Index n, int rank) {
  Rng rng = stream_rng(seed, tag, counter);
  Matrix m(n, rank);
  fill_gaussian(rng, m, 1.0);
  return m;
}

MaskArray draw_mask(Index rows, Index cols, double observe_ratio, Rng& rng) {
  MaskArray mask(rows, cols);
  for (Index l = 0; l < rows; ++l) {
    for (Index w = 0; w < cols; ++w) {
      mask(l, w) = rng.bernoulli(observe_ratio);
    }
  }
  return mask;
}

}  // namespace

SyntheticStream::SyntheticStream(ScenarioSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.mode == ScenarioMode::stationary) {
    segment_start_ = {0};
    segment_epoch_ = {0};
  } else {
    Index start = 0;
    std::size_t epoch = 0;
    for (std::size_t s = 0; s < spec_.segments.size(); ++s) {
      segment_start_.push_back(start);
      if (s > 0 && spec_.segments[s].fresh_factors) ++epoch;
      segment_epoch_.push_back(epoch);
      start += spec_.segments[s].length;
    }
  }
  const std::size_t epochs = segment_epoch_.back() + 1;
  for (std::size_t e = 0; e < epochs; ++e) {
    epoch_row_factors_.push_back(draw_factor(
        spec_.seed, RngStream::truth_row_factor, e, spec_.rows, spec_.rank));
    epoch_col_factors_.push_back(draw_factor(
        spec_.seed, RngStream::truth_col_factor, e, spec_.cols, spec_.rank));
  }
}

void SyntheticStream::truth_factors(Index t, Matrix* row, Matrix* col) const {
  std::size_t s = segment_start_.size() - 1;
  while (segment_start_[s] > t) --s;
  const std::size_t epoch = segment_epoch_[s];
  *row = epoch_row_factors_[epoch];
  *col = epoch_col_factors_[epoch];
  if (spec_.drift_window == 0 || s == 0) return;
  const std::size_t prev = segment_epoch_[s - 1];
  if (prev == epoch) return;
  const Index offset = t - segment_start_[s];
  if (offset + 1 >= spec_.drift_window) return;
  // Blend reaches the new factors on the drift_window-th slice of the
  // segment; the first slice has already moved 1/drift_window of the way.
  const double u = double(offset + 1) / double(spec_.drift_window);
  *row = (1.0 - u) * epoch_row_factors_[prev] + u * epoch_row_factors_[epoch];
  *col = (1.0 - u) * epoch_col_factors_[prev] + u * epoch_col_factors_[epoch];
}

Matrix SyntheticStream::truth(Index t) const {
  if (t < 0 || t >= spec_.length) {
    throw StructuralError("slice index out of range");
  }
  Matrix row, col;
  truth_factors(t, &row, &col);
  Rng rng = stream_rng(spec_.seed, RngStream::slice_weights,
                       std::uint64_t(t));
  Vector weights(spec_.rank);
  fill_gaussian(rng, weights, 1.0);
  return row * weights.asDiagonal() * col.transpose();
}

MaskedSlice SyntheticStream::slice(Index t) const {
  Matrix values = truth(t);
  if (spec_.noise > 0.0) {
    // Noise is drawn for every position so the value at an observed entry
    // does not depend on the mask.
    Rng rng = stream_rng(spec_.seed, RngStream::noise, std::uint64_t(t));
    Matrix noise(spec_.rows, spec_.cols);
    fill_gaussian(rng, noise, spec_.noise);
    values += noise;
  }
  Rng rng = stream_rng(spec_.seed, RngStream::mask,
                       spec_.fixed_mask ? 0 : std::uint64_t(t));
  MaskArray mask = draw_mask(spec_.rows, spec_.cols, spec_.observe_ratio, rng);
  return make_masked_slice(values, mask, t);
}

namespace {

StreamSource materialize(const SyntheticStream& stream) {
  StreamSource source;
  source.slices.reserve(std::size_t(stream.size()));
  source.truth.reserve(std::size_t(stream.size()));
  for (Index t = 0; t < stream.size(); ++t) {
    source.slices.push_back(stream.slice(t));
    source.truth.push_back(stream.truth(t));
  }
  return source;
}

}  // namespace

StreamSource gen_stationary(const ScenarioSpec& spec) {
  if (spec.mode != ScenarioMode::stationary) {
    throw StructuralError("gen_stationary needs a stationary scenario");
  }
  return materialize(SyntheticStream(spec));
}

StreamSource gen_dynamic(const ScenarioSpec& spec) {
  if (spec.mode != ScenarioMode::dynamic) {
    throw StructuralError("gen_dynamic needs a dynamic scenario");
  }
  return materialize(SyntheticStream(spec));
}

MaskArray gen_mask(Index rows, Index cols, double observe_ratio,
                   std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw StructuralError("mask dimensions must be positive");
  }
  if (!(observe_ratio > 0.0) || !(observe_ratio <= 1.0)) {
    throw StructuralError("observe ratio must lie in (0, 1]");
  }
  Rng rng = stream_rng(seed, RngStream::mask, 0);
  return draw_mask(rows, cols, observe_ratio, rng);
}

}  // namespace olstec
