#pragma once

#include <string>
#include <vector>

#include "olstec/model.hpp"

namespace olstec {

/// One evaluated slice of one run.
struct MetricRecord {
  Index t = 0;
  double residual = 0.0;
  double running_avg = 0.0;
  double wall_ms = 0.0;
  std::string algo;
};

/// ||estimate - reference||_F^2 / ||reference||_F^2 over all entries.
/// Throws UndefinedMetricError when the reference has zero norm.
double normalized_residual(const Matrix& estimate, const Matrix& reference);

/// Arithmetic mean of a nonempty error sequence, summed left to right so it
/// matches an incremental prefix accumulator exactly.
double running_average(const std::vector<double>& errors);

struct SummaryRow {
  Index t = 0;
  std::string algo;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  double running_avg_mean = 0.0;
  double running_avg_std = 0.0;
};

/// Per-t mean and sample standard deviation (N-1 denominator, 0 for a single
/// run) across runs, grouped by algorithm tag. Runs sharing a tag must have
/// identical length and t columns. Rows come out grouped by tag in first-seen
/// order, t ascending within a tag.
std::vector<SummaryRow> summarize_runs(
    const std::vector<std::vector<MetricRecord>>& runs);

}  // namespace olstec
