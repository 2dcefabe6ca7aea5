#pragma once

#include <cstdint>

#include "olstec/model.hpp"

namespace olstec {

/// One scaling measurement point: a stationary scenario is generated up
/// front, then a fresh tracker consumes it `repetitions` times while every
/// step is timed individually.
struct BenchConfig {
  Index rows = 100;
  Index cols = 100;
  int rank = 5;
  double observe_ratio = 0.1;
  Index slices = 50;
  int repetitions = 5;
  std::uint64_t seed = 1;
  double forgetting = 0.88;
  double regularization = 1e-9;
};

struct BenchResult {
  double median_step_ms = 0.0;
  double mean_step_ms = 0.0;
  std::size_t state_bytes = 0;  // tracker factors plus per-row Gram matrices
  double mean_observed = 0.0;   // mean observed entries per slice
};

BenchResult measure_tracker(const BenchConfig& config);

}  // namespace olstec
