// Command-line front end: synthetic stream generation, tracking runs with
// CSV metrics, PGM frame ingestion, and per-slice runtime measurements.
//
// Exit codes: 0 success, 1 numerical or runtime failure, 2 usage error
// (bad flags, missing files).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "olstec/olstec.hpp"

namespace {

using olstec::Index;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError("input file not found: " + path);
  }
}

std::string join_u64(const std::vector<std::uint64_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  std::string mode = "stationary";
  Index rows = 100;
  Index cols = 100;
  Index length = 1000;
  int rank = 5;
  double noise = 1e-3;
  double rho = 0.1;
  std::uint64_t seed = 0;
  std::vector<Index> segments;
  Index drift = 0;
  bool fixed_mask = false;
  std::string out;
};

void run_synth(const SynthArgs& args) {
  olstec::ScenarioSpec spec;
  spec.rows = args.rows;
  spec.cols = args.cols;
  spec.length = args.length;
  spec.rank = args.rank;
  spec.noise = args.noise;
  spec.observe_ratio = args.rho;
  spec.seed = args.seed;
  spec.fixed_mask = args.fixed_mask;
  spec.drift_window = args.drift;
  if (args.mode == "stationary") {
    spec.mode = olstec::ScenarioMode::stationary;
  } else if (args.mode == "dynamic") {
    spec.mode = olstec::ScenarioMode::dynamic;
    if (args.segments.empty()) {
      if (args.length % 4 != 0) {
        throw UsageError("default dynamic segmentation needs T divisible by 4;"
                         " pass --segments");
      }
      for (int s = 0; s < 4; ++s) {
        spec.segments.push_back({args.length / 4, true});
      }
    } else {
      for (Index len : args.segments) spec.segments.push_back({len, true});
    }
  } else {
    throw UsageError("unknown mode: " + args.mode);
  }

  const olstec::SyntheticStream stream(spec);
  olstec::StreamHeader header;
  header.rows = spec.rows;
  header.cols = spec.cols;
  header.length = std::uint64_t(spec.length);
  header.has_truth = true;
  olstec::StreamWriter writer(args.out, header);
  for (Index t = 0; t < spec.length; ++t) {
    writer.write(stream.slice(t), stream.truth(t));
  }
  writer.close();
  std::cout << "wrote " << spec.length << " slices to " << args.out << "\n";
}

// ---------------------------------------------------------------- track ---

struct TrackArgs {
  std::string algo = "olstec";
  std::string input;
  std::string metrics_out;
  std::string summary_out;
  std::string recon_out;
  int rank = 5;
  double lambda = 0.88;
  double mu = 1e-9;
  double gamma = 100.0;
  double eta = 0.1;
  double decay = 0.5;
  int iters = 300;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  int runs = 1;
};

struct RunOutput {
  std::vector<olstec::MetricRecord> records;
  bool used_truth = false;
};

class ReconWriter {
 public:
  ReconWriter(const std::string& path, const olstec::StreamHeader& input) {
    if (path.empty()) return;
    olstec::StreamHeader header;
    header.rows = input.rows;
    header.cols = input.cols;
    header.length = input.length;
    header.has_truth = false;
    writer_.emplace(path, header);
    mask_ = olstec::MaskArray::Constant(input.rows, input.cols, true);
  }

  void write(const olstec::Matrix& estimate, Index t) {
    if (!writer_) return;
    writer_->write(olstec::make_masked_slice(estimate, mask_, t));
  }

  void close() {
    if (writer_) writer_->close();
  }

 private:
  std::optional<olstec::StreamWriter> writer_;
  olstec::MaskArray mask_;
};

olstec::MetricRecord make_record(Index t, const olstec::Matrix& estimate,
                                 const olstec::Matrix& reference,
                                 double wall_ms, const std::string& algo,
                                 double* residual_sum, Index* residual_count) {
  double residual = std::numeric_limits<double>::quiet_NaN();
  try {
    residual = olstec::normalized_residual(estimate, reference);
  } catch (const olstec::UndefinedMetricError&) {
    // Zero-norm reference: leave the residual as NaN and keep the running
    // average over the slices where the metric exists.
  }
  olstec::MetricRecord record;
  record.t = t;
  record.residual = residual;
  if (std::isfinite(residual)) {
    *residual_sum += residual;
    ++*residual_count;
  }
  record.running_avg = *residual_count > 0
                           ? *residual_sum / double(*residual_count)
                           : std::numeric_limits<double>::quiet_NaN();
  record.wall_ms = wall_ms;
  record.algo = algo;
  return record;
}

RunOutput run_online(const TrackArgs& args, std::uint64_t seed) {
  olstec::StreamReader reader(args.input);
  const olstec::StreamHeader& header = reader.header();
  RunOutput out;
  out.used_truth = header.has_truth;

  olstec::TrackerParams params;
  params.rank = args.rank;
  params.forgetting = args.lambda;
  params.regularization = args.mu;
  params.init_scale = args.gamma;

  std::optional<olstec::OlstecTracker> olstec_tracker;
  std::optional<olstec::SgdTracker> sgd_tracker;
  if (args.algo == "olstec") {
    olstec_tracker.emplace(header.rows, header.cols, params, seed);
  } else {
    olstec::SgdTracker::Options options;
    options.step_size = args.eta;
    options.decay = args.decay;
    options.regularization = args.mu;
    sgd_tracker.emplace(header.rows, header.cols, args.rank, seed, options);
  }

  ReconWriter recon(args.recon_out, header);
  olstec::MaskedSlice slice;
  olstec::Matrix truth;
  double residual_sum = 0.0;
  Index residual_count = 0;
  using clock = std::chrono::steady_clock;
  while (reader.next(&slice, &truth)) {
    const auto start = clock::now();
    const olstec::TrackStep step = olstec_tracker
                                       ? olstec_tracker->step(slice)
                                       : sgd_tracker->step(slice);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - start)
            .count();
    const olstec::Matrix& reference = header.has_truth ? truth : slice.values;
    out.records.push_back(make_record(slice.index, step.estimate, reference,
                                      wall_ms, args.algo, &residual_sum,
                                      &residual_count));
    recon.write(step.estimate, slice.index);
  }
  recon.close();
  if (out.records.empty()) {
    throw olstec::StructuralError("input stream holds no slices");
  }
  return out;
}

RunOutput run_batch(const TrackArgs& args, std::uint64_t seed) {
  const olstec::StreamSource source = olstec::read_stream(args.input);
  if (source.slices.empty()) {
    throw olstec::StructuralError("input stream holds no slices");
  }
  olstec::BatchProblem problem;
  problem.slices = source.slices;
  problem.rank = args.rank;
  problem.regularization = args.mu;
  problem.max_iterations = args.iters;
  problem.tolerance = args.tol;

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const olstec::BatchResult result = olstec::batch_als(problem, seed);
  const double total_ms =
      std::chrono::duration<double, std::milli>(clock::now() - start).count();
  // The batch solver has no per-slice cost; wall_ms is amortized.
  const double wall_ms = total_ms / double(source.slices.size());

  RunOutput out;
  out.used_truth = source.has_truth();
  ReconWriter recon(args.recon_out, olstec::StreamHeader{
                                        olstec::kStreamVersion, source.rows(),
                                        source.cols(),
                                        std::uint64_t(source.size()), false});
  double residual_sum = 0.0;
  Index residual_count = 0;
  for (std::size_t t = 0; t < source.slices.size(); ++t) {
    const olstec::Matrix estimate =
        result.row_factor * result.slice_weights.row(Index(t)).asDiagonal() *
        result.col_factor.transpose();
    const olstec::Matrix& reference =
        source.has_truth() ? source.truth[t] : source.slices[t].values;
    out.records.push_back(make_record(source.slices[t].index, estimate,
                                      reference, wall_ms, args.algo,
                                      &residual_sum, &residual_count));
    recon.write(estimate, source.slices[t].index);
  }
  recon.close();
  return out;
}

void run_track(const TrackArgs& args) {
  require_input_file(args.input);
  if (args.runs < 1) {
    throw UsageError("--runs must be at least 1");
  }
  if (args.metrics_out.empty() && args.summary_out.empty() &&
      args.recon_out.empty()) {
    throw UsageError("nothing to do: pass --metrics-out, --summary-out, or "
                     "--recon-out");
  }

  std::vector<olstec::MetricRun> metric_runs;
  std::vector<std::vector<olstec::MetricRecord>> record_sets;
  std::vector<std::uint64_t> seeds;
  bool used_truth = false;
  for (int run = 0; run < args.runs; ++run) {
    const std::uint64_t seed = args.seed + std::uint64_t(run);
    TrackArgs one = args;
    if (run > 0) one.recon_out.clear();  // reconstructions: first run only
    RunOutput output = (args.algo == "als-batch") ? run_batch(one, seed)
                                                  : run_online(one, seed);
    used_truth = output.used_truth;
    record_sets.push_back(output.records);
    metric_runs.push_back({std::move(output.records), seed});
    seeds.push_back(seed);
  }

  std::vector<std::pair<std::string, std::string>> metadata;
  metadata.emplace_back("format", "metrics-v1");
  metadata.emplace_back("stream_version",
                        std::to_string(olstec::kStreamVersion));
  metadata.emplace_back("rng", "splitmix64-bm-v1");
  metadata.emplace_back("algo", args.algo);
  metadata.emplace_back("input", args.input);
  metadata.emplace_back("rank", std::to_string(args.rank));
  if (args.algo == "olstec") {
    metadata.emplace_back("lambda", olstec::format_double(args.lambda));
    metadata.emplace_back("mu", olstec::format_double(args.mu));
    metadata.emplace_back("gamma", olstec::format_double(args.gamma));
  } else if (args.algo == "sgd") {
    metadata.emplace_back("eta", olstec::format_double(args.eta));
    metadata.emplace_back("decay", olstec::format_double(args.decay));
    metadata.emplace_back("mu", olstec::format_double(args.mu));
  } else {
    metadata.emplace_back("iters", std::to_string(args.iters));
    metadata.emplace_back("tol", olstec::format_double(args.tol));
    metadata.emplace_back("mu", olstec::format_double(args.mu));
  }
  metadata.emplace_back("runs", std::to_string(args.runs));
  metadata.emplace_back("seeds", join_u64(seeds));
  metadata.emplace_back("reference", used_truth ? "truth" : "observed");

  if (!args.metrics_out.empty()) {
    olstec::write_metrics_csv(args.metrics_out, metric_runs, metadata);
  }
  if (!args.summary_out.empty()) {
    std::vector<std::pair<std::string, std::string>> summary_meta = metadata;
    summary_meta.front().second = "summary-v1";
    olstec::write_summary_csv(args.summary_out,
                              olstec::summarize_runs(record_sets),
                              summary_meta);
  }
}

// --------------------------------------------------------------- ingest ---

struct IngestArgs {
  std::string dir;
  double rho = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

void run_ingest(const IngestArgs& args) {
  if (!std::filesystem::is_directory(args.dir)) {
    throw UsageError("frame directory not found: " + args.dir);
  }
  const olstec::StreamSource source =
      olstec::ingest_frame_directory(args.dir, args.rho, args.seed);
  olstec::write_stream(args.out, source);
  std::cout << "wrote " << source.size() << " frames to " << args.out << "\n";
}

// ---------------------------------------------------------------- bench ---

struct BenchArgs {
  Index rows = 100;
  Index cols = 100;
  std::vector<int> ranks = {5, 10};
  std::vector<double> rhos = {0.1, 0.2};
  Index slices = 30;
  int reps = 5;
  std::uint64_t seed = 1;
};

void run_bench(const BenchArgs& args) {
  std::cout << "L,W,rank,rho,slices,reps,median_ms,mean_ms,state_bytes,"
               "mean_observed\n";
  for (int rank : args.ranks) {
    for (double rho : args.rhos) {
      olstec::BenchConfig config;
      config.rows = args.rows;
      config.cols = args.cols;
      config.rank = rank;
      config.observe_ratio = rho;
      config.slices = args.slices;
      config.repetitions = args.reps;
      config.seed = args.seed;
      const olstec::BenchResult result = olstec::measure_tracker(config);
      std::cout << args.rows << ',' << args.cols << ',' << rank << ','
                << olstec::format_double(rho) << ',' << args.slices << ','
                << args.reps << ','
                << olstec::format_double(result.median_step_ms) << ','
                << olstec::format_double(result.mean_step_ms) << ','
                << result.state_bytes << ','
                << olstec::format_double(result.mean_observed) << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming low-rank tensor subspace tracking"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic stream");
  synth->add_option("--mode", synth_args.mode, "stationary or dynamic");
  synth->add_option("--L", synth_args.rows, "slice rows");
  synth->add_option("--W", synth_args.cols, "slice columns");
  synth->add_option("--T", synth_args.length, "number of slices");
  synth->add_option("--rank", synth_args.rank, "ground-truth CP rank");
  synth->add_option("--noise", synth_args.noise, "noise standard deviation");
  synth->add_option("--rho", synth_args.rho, "observation probability");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--segments", synth_args.segments,
                    "dynamic segment lengths")
      ->delimiter(',');
  synth->add_option("--drift", synth_args.drift,
                    "blend factors over this many slices after a change");
  synth->add_flag("--fixed-mask", synth_args.fixed_mask,
                  "reuse slice 0's mask for every slice");
  synth->add_option("--out", synth_args.out, "output stream path")
      ->required();

  TrackArgs track_args;
  CLI::App* track = app.add_subcommand("track", "run a tracker over a stream");
  track->add_option("--algo", track_args.algo, "olstec, sgd, or als-batch")
      ->check(CLI::IsMember({"olstec", "sgd", "als-batch"}));
  track->add_option("--input", track_args.input, "input stream path")
      ->required();
  track->add_option("--metrics-out", track_args.metrics_out,
                    "per-slice metrics CSV");
  track->add_option("--summary-out", track_args.summary_out,
                    "across-run summary CSV");
  track->add_option("--recon-out", track_args.recon_out,
                    "reconstruction stream (first run)");
  track->add_option("--rank", track_args.rank, "tracker rank");
  track->add_option("--lambda", track_args.lambda, "forgetting factor");
  track->add_option("--mu", track_args.mu, "ridge regularization");
  track->add_option("--gamma", track_args.gamma,
                    "initial Gram scale (Gram starts at I/gamma)");
  track->add_option("--eta", track_args.eta, "sgd step size");
  track->add_option("--decay", track_args.decay, "sgd step-size decay power");
  track->add_option("--iters", track_args.iters, "als-batch sweep budget");
  track->add_option("--tol", track_args.tol,
                    "als-batch relative objective tolerance");
  track->add_option("--seed", track_args.seed, "tracker seed (first run)");
  track->add_option("--runs", track_args.runs,
                    "repetitions with seeds seed..seed+N-1");

  IngestArgs ingest_args;
  CLI::App* ingest =
      app.add_subcommand("ingest", "build a stream from PGM frames");
  ingest->add_option("--dir", ingest_args.dir, "directory of .pgm frames")
      ->required();
  ingest->add_option("--rho", ingest_args.rho, "observation probability");
  ingest->add_option("--seed", ingest_args.seed, "mask seed");
  ingest->add_option("--out", ingest_args.out, "output stream path")
      ->required();

  BenchArgs bench_args;
  CLI::App* bench =
      app.add_subcommand("bench", "per-slice runtime and state measurements");
  bench->add_option("--L", bench_args.rows, "slice rows");
  bench->add_option("--W", bench_args.cols, "slice columns");
  bench->add_option("--ranks", bench_args.ranks, "ranks to measure")
      ->delimiter(',');
  bench->add_option("--rhos", bench_args.rhos, "observation ratios")
      ->delimiter(',');
  bench->add_option("--slices", bench_args.slices, "slices per repetition");
  bench->add_option("--reps", bench_args.reps, "repetitions (median of all)");
  bench->add_option("--seed", bench_args.seed, "scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) run_synth(synth_args);
    if (*track) run_track(track_args);
    if (*ingest) run_ingest(ingest_args);
    if (*bench) run_bench(bench_args);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
