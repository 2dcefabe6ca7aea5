#include "olstec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "olstec/errors.hpp"

namespace olstec {

double normalized_residual(const Matrix& estimate, const Matrix& reference) {
  if (estimate.rows() != reference.rows() ||
      estimate.cols() != reference.cols()) {
    throw StructuralError("residual operands must share dimensions");
  }
  const double denom = reference.squaredNorm();
  if (denom == 0.0) {
    throw UndefinedMetricError("normalized residual of a zero reference");
  }
  return (estimate - reference).squaredNorm() / denom;
}

double running_average(const std::vector<double>& errors) {
  if (errors.empty()) {
    throw StructuralError("running average of an empty sequence");
  }
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / double(errors.size());
}

namespace {

struct Accumulator {
  std::string algo;
  std::vector<Index> t;
  // samples[i] holds one value per run at position i.
  std::vector<std::vector<double>> residuals;
  std::vector<std::vector<double>> averages;
};

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / double(xs.size());
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) return 0.0;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / double(xs.size() - 1));
}

}  // namespace

std::vector<SummaryRow> summarize_runs(
    const std::vector<std::vector<MetricRecord>>& runs) {
  if (runs.empty()) {
    throw StructuralError("summary of an empty run list");
  }
  std::vector<Accumulator> groups;
  for (const std::vector<MetricRecord>& run : runs) {
    if (run.empty()) {
      throw StructuralError("summary of an empty run");
    }
    const std::string& algo = run.front().algo;
    Accumulator* group = nullptr;
    for (Accumulator& g : groups) {
      if (g.algo == algo) {
        group = &g;
        break;
      }
    }
    if (group == nullptr) {
      groups.push_back({});
      group = &groups.back();
      group->algo = algo;
      group->t.reserve(run.size());
      for (const MetricRecord& r : run) group->t.push_back(r.t);
      group->residuals.resize(run.size());
      group->averages.resize(run.size());
    }
    if (run.size() != group->t.size()) {
      throw StructuralError("runs under one tag must share length");
    }
    for (std::size_t i = 0; i < run.size(); ++i) {
      const MetricRecord& r = run[i];
      if (r.algo != group->algo) {
        throw StructuralError("run mixes algorithm tags");
      }
      if (r.t != group->t[i]) {
        throw StructuralError("runs under one tag must share slice indices");
      }
      group->residuals[i].push_back(r.residual);
      group->averages[i].push_back(r.running_avg);
    }
  }

  std::vector<SummaryRow> rows;
  for (const Accumulator& g : groups) {
    for (std::size_t i = 0; i < g.t.size(); ++i) {
      SummaryRow row;
      row.t = g.t[i];
      row.algo = g.algo;
      row.residual_mean = mean_of(g.residuals[i]);
      row.residual_std = sample_std(g.residuals[i], row.residual_mean);
      row.running_avg_mean = mean_of(g.averages[i]);
      row.running_avg_std = sample_std(g.averages[i], row.running_avg_mean);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace olstec
