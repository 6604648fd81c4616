#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "grbm/baselines.hpp"
#include "grbm/patches.hpp"
#include "grbm/training.hpp"

namespace grbm {

// One model evaluated in one trial.
struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;
  double ll_train = std::numeric_limits<double>::quiet_NaN();
  double ll_test = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> amari_error;
  std::vector<double> order_mass;
  std::optional<bool> recovered;
  std::optional<double> seconds_per_epoch;
  std::vector<double> curve;  // per-epoch test log-likelihood
  bool diverged = false;
  std::string error;  // empty when the trial succeeded

  bool operator==(const TrialRecord&) const;
};

struct SummaryRow {
  std::string method;
  std::string metric;
  int count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

struct ExperimentReport {
  std::string command;
  std::vector<TrialRecord> records;

  // Per method (first-appearance order) and metric, over the records where the
  // metric is present and finite. "recovered" averages the flag as 0/1.
  std::vector<SummaryRow> summary() const;
  std::optional<SummaryRow> find(const std::string& method, const std::string& metric) const;

  std::string to_jsonl() const;
  std::string summary_csv() const;
  std::string records_csv() const;
  static ExperimentReport from_jsonl(const std::string& text);
};

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

// ---- blind source separation -------------------------------------------------

// CD-1 recipe used for the 2-D separation study.
TrainConfig bss_train_config();

struct BssExperimentConfig {
  int trials = 20;
  Index n_train = 40000;
  Index n_test = 30000;
  std::vector<Index> hidden_sizes{2};
  TrainConfig train = bss_train_config();
  bool baselines = true;
  Index mog_components = 3;
  MogConfig mog{};
  IcaConfig ica{};
  double recovery_threshold_deg = 15.0;
  std::uint64_t seed = 0;
  int workers = 1;
  bool timings = false;  // wall-clock fields make the report non-reproducible
};

std::uint64_t trial_seed(std::uint64_t master, int trial);

// Records for one trial: one per GRBM size, then Gaussian, ICA, MoG-K and the
// true distribution when baselines are enabled. Failures are recorded in the
// `error` field instead of being thrown.
std::vector<TrialRecord> run_bss_trial(const BssExperimentConfig& cfg, int trial);

// Trials run on `workers` threads; records are ordered by trial index.
ExperimentReport run_bss(const BssExperimentConfig& cfg);

std::string grbm_method_label(Index num_visible, Index num_hidden);

// ---- sampler benchmark ---------------------------------------------------------

// "CD-k", "PCD-k" or "PT-n" (n inverse temperatures evenly spaced up to 1).
struct SamplerSpec {
  std::string label;
  Method method = Method::cd;
  int k_steps = 1;
  std::vector<double> betas;
};

SamplerSpec parse_sampler(const std::string& label);

// The separation recipe with a smaller learning rate and more epochs, so that
// per-epoch curves are smooth enough to compare convergence.
TrainConfig bench_train_config();

struct BenchConfig {
  std::vector<std::string> samplers{"CD-1", "PCD-1", "CD-10", "PCD-10", "PT-10"};
  Index dims = 16;
  Index num_hidden = 8;
  Index n_train = 5000;
  Index n_test = 5000;
  // When set, the data are ZCA-whitened sqrt(dims) x sqrt(dims) patches of
  // these images (whitening fit on the train rows); otherwise whitened
  // Laplacian mixtures in `dims` dimensions.
  std::vector<Image> images;
  TrainConfig train = bench_train_config();
  double convergence_tolerance = 0.05;
  std::uint64_t seed = 0;
};

struct BenchRun {
  std::string label;
  std::vector<double> curve;          // test log-likelihood after each epoch
  std::vector<double> epoch_seconds;  // training time per epoch, monitoring excluded
  double seconds_per_epoch = 0.0;
  int epochs_to_converge = 0;
  bool diverged = false;
};

// First epoch (1-based) from which the curve stays within `tolerance` of its
// final value; 0 for an empty curve.
int epochs_to_converge(const std::vector<double>& curve, double tolerance);

// Train/test sets used by run_sampler_bench.
struct BenchData {
  DataBatch train;
  DataBatch test;
};
BenchData bench_data(const BenchConfig& cfg);

// Equal-epoch runs of every sampler on the same seeded data and initial model.
std::vector<BenchRun> run_sampler_bench(const BenchConfig& cfg);

// Deterministic part (curves, convergence, divergence) as a report; timings
// are only included when `timings` is set.
ExperimentReport bench_report(const std::vector<BenchRun>& runs, std::uint64_t seed, bool timings);
std::string bench_timings_csv(const std::vector<BenchRun>& runs);

}  // namespace grbm
