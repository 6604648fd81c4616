#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grbm/ais.hpp"
#include "grbm/exact.hpp"
#include "grbm/gradient.hpp"
#include "grbm/model.hpp"
#include "grbm/rng.hpp"

namespace grbm {

enum class Method { cd, pcd, pt };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

// Momentum for an epoch: initial * factor^(epoch / every_epochs), and zero for
// the last `zero_final_epochs` epochs.
struct MomentumSchedule {
  double initial = 0.9;
  double factor = 0.9;
  int every_epochs = 5;
  int zero_final_epochs = 0;

  double at(int epoch, int total_epochs) const;
};

enum class Monitor { none, exact, ais };

std::vector<double> default_pt_temperatures();

struct TrainConfig {
  Method method = Method::cd;
  int k_steps = 1;
  // Inverse temperatures: replica r samples from exp(-beta_r E). Strictly
  // increasing, last entry 1.0 (the model).
  std::vector<double> pt_temperatures = default_pt_temperatures();
  double learning_rate_w = 0.1;
  double learning_rate_b = 0.1;
  std::optional<double> learning_rate_c;  // default 0.1 * learning_rate_w
  double learning_rate_sigma = 0.01;
  MomentumSchedule momentum;
  int epochs = 50;
  int batch_size = 100;
  // Absolute cap on each weight-update column norm.
  std::optional<double> grad_norm_cap;
  // Alternative: cap = fraction * max_l ||x_l|| of the training data.
  std::optional<double> grad_norm_cap_data_fraction;
  bool learn_sigma = false;
  double tau_init = 0.01;
  double sigma_init = 1.0;
  // Persistent chains for PCD/PT; 0 means batch_size.
  int num_chains = 0;
  std::uint64_t seed = 0;
  Monitor monitor = Monitor::exact;
  int monitor_every = 1;
  AisConfig monitor_ais{};
  int enumeration_cap = kDefaultEnumerationCap;

  double lr_c() const { return learning_rate_c.value_or(0.1 * learning_rate_w); }
  void validate(Index dataset_rows) const;
};

// Negative-phase chain state for PCD (one replica) and PT (one replica per
// inverse temperature).
struct SamplerState {
  std::vector<double> betas;
  std::vector<RowMatrix> visible;  // per replica, chains x M
  std::vector<RowMatrix> hidden;   // per replica, chains x N
  std::vector<long> swap_attempts;  // per adjacent pair
  std::vector<long> swap_accepts;
  int swap_parity = 0;

  bool initialized() const { return !visible.empty(); }
  Index num_chains() const { return visible.empty() ? 0 : visible.front().rows(); }
  // The unit-temperature chains.
  const RowMatrix& model_chains() const { return visible.back(); }

  // Chains start at the rows of `start`, cycling when num_chains exceeds them.
  static SamplerState persistent(const DataBatch& start, Index num_chains, Index num_hidden);
  static SamplerState tempered(const DataBatch& start, Index num_chains, Index num_hidden,
                               std::vector<double> betas);
};

GrbmParams init_params(const DataBatch& d, Index num_hidden, const TrainConfig& cfg, Rng& rng);

// Uniform init bound sqrt(6) / sqrt(N + M).
double weight_init_bound(Index num_visible, Index num_hidden);

GradientSet positive_phase(const DataBatch& batch, const GrbmParams& p);

struct CdResult {
  GradientSet stats;
  RowMatrix samples;  // x^(k), one row per batch row
};

// Chains start at the batch rows and run k full Gibbs steps.
CdResult cd_negative_phase(const DataBatch& batch, const GrbmParams& p, int k, Rng& rng);

// Advances the persistent chains k Gibbs steps. Throws ContractError when the
// state is uninitialized.
GradientSet pcd_negative_phase(const GrbmParams& p, SamplerState& state, int k, Rng& rng);

// k Gibbs sweeps per replica on exp(-beta E), then one round of adjacent-pair
// swaps (even pairs on even rounds, odd pairs on odd rounds). Statistics come
// from the beta = 1 replica.
GradientSet pt_negative_phase(const GrbmParams& p, SamplerState& state, int k, Rng& rng);

// min(1, exp((beta_a - beta_b)(E_a - E_b))).
double swap_acceptance(double beta_a, double beta_b, double energy_a, double energy_b);

// Rescales every column with norm above `cap` to norm `cap`.
void restrict_column_norms(Matrix& w, double cap);

double max_data_norm(const DataBatch& d);

struct MomentumState {
  std::optional<GradientSet> previous;
  double last_max_column_norm = 0.0;
};

// update = momentum * previous_update + lr * gradient per block, with the
// weight block's columns restricted to `column_cap` (if any). Sigma moves only
// when learn_sigma is set and is then clamped to kSigmaFloor.
GrbmParams apply_update(GrbmParams p, const GradientSet& gradient, const TrainConfig& cfg,
                        double momentum, std::optional<double> column_cap,
                        MomentumState& state);

struct EpochRecord {
  int epoch = 0;
  double avg_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  double log_partition = std::numeric_limits<double>::quiet_NaN();
  double momentum = 0.0;
  double max_update_column_norm = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::optional<double> column_cap;
};

struct TrainResult {
  GrbmParams params;
  TrainHistory history;
};

// Mini-batch maximum-likelihood training. `monitor_data` (default: the
// training data) is scored after every `monitor_every` epochs.
TrainResult train(const DataBatch& data, Index num_hidden, const TrainConfig& cfg,
                  const DataBatch* monitor_data = nullptr);

// Entry k counts samples for which a single draw h ~ P(h | x) had k ones.
std::vector<long> activated_units_histogram(const GrbmParams& p, const DataBatch& d, Rng& rng);
double mean_activated_units(const std::vector<long>& histogram);

}  // namespace grbm
