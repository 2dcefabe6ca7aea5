#include "olstec/bench.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

#include "olstec/errors.hpp"
#include "olstec/synth.hpp"
#include "olstec/tracker.hpp"

namespace olstec {

BenchResult measure_tracker(const BenchConfig& config) {
  if (config.slices < 1 || config.repetitions < 1) {
    throw StructuralError("bench needs at least one slice and repetition");
  }
  ScenarioSpec spec;
  spec.mode = ScenarioMode::stationary;
  spec.rows = config.rows;
  spec.cols = config.cols;
  spec.length = config.slices;
  spec.rank = config.rank;
  spec.observe_ratio = config.observe_ratio;
  spec.seed = config.seed;
  const SyntheticStream stream(spec);
  std::vector<MaskedSlice> slices;
  slices.reserve(std::size_t(config.slices));
  for (Index t = 0; t < config.slices; ++t) {
    slices.push_back(stream.slice(t));
  }

  TrackerParams params;
  params.rank = config.rank;
  params.forgetting = config.forgetting;
  params.regularization = config.regularization;

  BenchResult result;
  std::vector<double> step_ms;
  step_ms.reserve(std::size_t(config.slices) *
                  std::size_t(config.repetitions));
  using clock = std::chrono::steady_clock;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    OlstecTracker tracker(config.rows, config.cols, params, config.seed);
    for (const MaskedSlice& slice : slices) {
      const auto start = clock::now();
      tracker.step(slice);
      const auto stop = clock::now();
      step_ms.push_back(
          std::chrono::duration<double, std::milli>(stop - start).count());
    }
    result.state_bytes = tracker.state_bytes();
  }

  const std::size_t mid = step_ms.size() / 2;
  std::nth_element(step_ms.begin(), step_ms.begin() + std::ptrdiff_t(mid),
                   step_ms.end());
  result.median_step_ms = step_ms[mid];
  double sum = 0.0;
  for (double ms : step_ms) sum += ms;
  result.mean_step_ms = sum / double(step_ms.size());

  std::size_t observed = 0;
  for (const MaskedSlice& slice : slices) {
    observed += std::size_t(slice.observed_count());
  }
  result.mean_observed = double(observed) / double(slices.size());
  return result;
}

}  // namespace olstec
