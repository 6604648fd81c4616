#include "grbm/training.hpp"

#include <chrono>
#include <numeric>

#include "grbm/kernels.hpp"

namespace grbm {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::cd:
      return "cd";
    case Method::pcd:
      return "pcd";
    case Method::pt:
      return "pt";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "cd" || name == "CD") return Method::cd;
  if (name == "pcd" || name == "PCD") return Method::pcd;
  if (name == "pt" || name == "PT") return Method::pt;
  throw ContractError("unknown training method: " + std::string(name));
}

double MomentumSchedule::at(int epoch, int total_epochs) const {
  if (zero_final_epochs > 0 && epoch >= total_epochs - zero_final_epochs) return 0.0;
  const int steps = every_epochs > 0 ? epoch / every_epochs : 0;
  return initial * std::pow(factor, steps);
}

std::vector<double> default_pt_temperatures() {
  std::vector<double> t(10);
  for (int i = 0; i < 10; ++i) t[i] = 0.1 * (i + 1);
  t.back() = 1.0;
  return t;
}

void TrainConfig::validate(Index dataset_rows) const {
  if (k_steps < 1) throw ContractError("k_steps must be at least 1");
  if (epochs < 1) throw ContractError("epochs must be positive");
  if (batch_size < 1) throw ContractError("batch_size must be positive");
  if (dataset_rows < 1) throw ContractError("training data is empty");
  if (batch_size > dataset_rows) throw ContractError("batch_size exceeds the dataset size");
  if (!(learning_rate_w > 0.0) || !(learning_rate_b > 0.0) || !(lr_c() > 0.0)) {
    throw ContractError("learning rates must be positive");
  }
  if (learn_sigma && !(learning_rate_sigma > 0.0)) {
    throw ContractError("learning_rate_sigma must be positive when learning sigma");
  }
  if (!(momentum.initial >= 0.0 && momentum.initial < 1.0)) {
    throw ContractError("initial momentum must lie in [0, 1)");
  }
  if (!(tau_init > 0.0)) throw ContractError("tau_init must be positive");
  if (!(sigma_init > 0.0)) throw ContractError("sigma_init must be positive");
  if (grad_norm_cap && !(*grad_norm_cap > 0.0)) throw ContractError("grad_norm_cap must be > 0");
  if (grad_norm_cap_data_fraction && !(*grad_norm_cap_data_fraction > 0.0)) {
    throw ContractError("grad_norm_cap_data_fraction must be > 0");
  }
  if (num_chains < 0) throw ContractError("num_chains must be non-negative");
  if (monitor_every < 1) throw ContractError("monitor_every must be positive");
  if (method == Method::pt) {
    if (pt_temperatures.empty()) throw ContractError("PT needs at least one temperature");
    for (std::size_t i = 0; i < pt_temperatures.size(); ++i) {
      if (!(pt_temperatures[i] > 0.0)) throw ContractError("PT temperatures must be positive");
      if (i > 0 && !(pt_temperatures[i] > pt_temperatures[i - 1])) {
        throw ContractError("PT temperatures must be strictly increasing");
      }
    }
    if (pt_temperatures.back() != 1.0) throw ContractError("last PT temperature must be 1.0");
  }
}

namespace {

RowMatrix tile_rows(const DataBatch& start, Index rows) {
  if (start.rows() < 1) throw ContractError("chains need at least one starting row");
  RowMatrix out(rows, start.cols());
  for (Index r = 0; r < rows; ++r) out.row(r) = start.row(r % start.rows());
  return out;
}

void gibbs_chain(std::span<double> x, std::span<double> h, const GrbmParams& p, int k, Rng& rng,
                 double beta) {
  for (int s = 0; s < k; ++s) {
    detail::sample_hidden(x, p, rng, h, beta);
    detail::sample_visible(h, p, rng, x, beta);
  }
}

}  // namespace

SamplerState SamplerState::persistent(const DataBatch& start, Index num_chains, Index num_hidden) {
  return tempered(start, num_chains, num_hidden, {1.0});
}

SamplerState SamplerState::tempered(const DataBatch& start, Index num_chains, Index num_hidden,
                                    std::vector<double> betas) {
  if (num_chains < 1) throw ContractError("need at least one chain");
  if (betas.empty() || betas.back() != 1.0) throw ContractError("last inverse temperature must be 1");
  SamplerState s;
  s.betas = std::move(betas);
  for (std::size_t r = 0; r < s.betas.size(); ++r) {
    s.visible.push_back(tile_rows(start, num_chains));
    s.hidden.push_back(RowMatrix::Zero(num_chains, num_hidden));
  }
  const std::size_t pairs = s.betas.size() - 1;
  s.swap_attempts.assign(pairs, 0);
  s.swap_accepts.assign(pairs, 0);
  return s;
}

double weight_init_bound(Index num_visible, Index num_hidden) {
  return std::sqrt(6.0) / std::sqrt(static_cast<double>(num_visible + num_hidden));
}

GrbmParams init_params(const DataBatch& d, Index num_hidden, const TrainConfig& cfg, Rng& rng) {
  if (d.rows() < 1 || d.cols() < 1) throw ContractError("init_params needs nonempty data");
  if (num_hidden < 1) throw ContractError("init_params needs at least one hidden unit");
  if (!(cfg.tau_init > 0.0)) throw ContractError("tau_init must be positive");
  const Index m = d.cols();
  GrbmParams p;
  p.sigma = cfg.sigma_init;
  p.visible_bias = d.colwise().mean().transpose();
  const double bound = weight_init_bound(m, num_hidden);
  p.weights.resize(m, num_hidden);
  for (Index j = 0; j < num_hidden; ++j) {
    for (Index i = 0; i < m; ++i) p.weights(i, j) = rng.uniform(-bound, bound);
  }
  // Every first-order component starts with mixing ratio tau to the anchor.
  const double b_norm = p.visible_bias.squaredNorm();
  const double log_tau = std::log(cfg.tau_init);
  p.hidden_bias.resize(num_hidden);
  for (Index j = 0; j < num_hidden; ++j) {
    const double shifted = (p.visible_bias + p.weights.col(j)).squaredNorm();
    p.hidden_bias[j] = -(shifted - b_norm) / (2.0 * p.sigma * p.sigma) + log_tau;
  }
  p.validate();
  return p;
}

GradientSet positive_phase(const DataBatch& batch, const GrbmParams& p) {
  return phase_statistics(batch, p);
}

CdResult cd_negative_phase(const DataBatch& batch, const GrbmParams& p, int k, Rng& rng) {
  if (k < 1) throw ContractError("CD needs k >= 1");
  if (batch.cols() != p.num_visible()) throw ContractError("batch dimension mismatch");
  CdResult out;
  out.samples = batch;
  std::vector<double> h(p.num_hidden());
  for (Index l = 0; l < out.samples.rows(); ++l) {
    gibbs_chain(row_span(out.samples, l), h, p, k, rng, 1.0);
  }
  out.stats = phase_statistics(out.samples, p);
  return out;
}

GradientSet pcd_negative_phase(const GrbmParams& p, SamplerState& state, int k, Rng& rng) {
  if (!state.initialized()) throw ContractError("PCD sampler state is not initialized");
  if (k < 1) throw ContractError("PCD needs k >= 1");
  RowMatrix& chains = state.visible.back();
  RowMatrix& hidden = state.hidden.back();
  if (chains.cols() != p.num_visible()) throw ContractError("chain dimension mismatch");
  for (Index c = 0; c < chains.rows(); ++c) {
    gibbs_chain(row_span(chains, c), row_span(hidden, c), p, k, rng, 1.0);
  }
  return phase_statistics(chains, p);
}

double swap_acceptance(double beta_a, double beta_b, double energy_a, double energy_b) {
  const double log_ratio = (beta_a - beta_b) * (energy_a - energy_b);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

GradientSet pt_negative_phase(const GrbmParams& p, SamplerState& state, int k, Rng& rng) {
  if (!state.initialized()) throw ContractError("PT sampler state is not initialized");
  if (k < 1) throw ContractError("PT needs k >= 1");
  const std::size_t replicas = state.betas.size();
  for (std::size_t r = 0; r < replicas; ++r) {
    RowMatrix& chains = state.visible[r];
    RowMatrix& hidden = state.hidden[r];
    for (Index c = 0; c < chains.rows(); ++c) {
      gibbs_chain(row_span(chains, c), row_span(hidden, c), p, k, rng, state.betas[r]);
    }
  }

  if (replicas > 1) {
    const Index chains = state.num_chains();
    std::vector<double> energies(replicas * static_cast<std::size_t>(chains));
    for (std::size_t r = 0; r < replicas; ++r) {
      for (Index c = 0; c < chains; ++c) {
        energies[r * chains + c] =
            detail::energy(row_span(state.visible[r], c), row_span(state.hidden[r], c), p);
      }
    }
    for (std::size_t a = static_cast<std::size_t>(state.swap_parity); a + 1 < replicas; a += 2) {
      const std::size_t b = a + 1;
      for (Index c = 0; c < chains; ++c) {
        const double ea = energies[a * chains + c];
        const double eb = energies[b * chains + c];
        const double log_ratio = (state.betas[a] - state.betas[b]) * (ea - eb);
        ++state.swap_attempts[a];
        if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
          ++state.swap_accepts[a];
          state.visible[a].row(c).swap(state.visible[b].row(c));
          state.hidden[a].row(c).swap(state.hidden[b].row(c));
        }
      }
    }
    state.swap_parity ^= 1;
  }
  return phase_statistics(state.model_chains(), p);
}

void restrict_column_norms(Matrix& w, double cap) {
  if (!(cap > 0.0)) throw ContractError("column norm cap must be positive");
  for (Index j = 0; j < w.cols(); ++j) {
    const double norm = w.col(j).norm();
    if (norm > cap) w.col(j) *= cap / norm;
  }
}

double max_data_norm(const DataBatch& d) {
  double best = 0.0;
  for (Index l = 0; l < d.rows(); ++l) best = std::max(best, d.row(l).norm());
  return best;
}

GrbmParams apply_update(GrbmParams p, const GradientSet& g, const TrainConfig& cfg,
                        double momentum, std::optional<double> column_cap,
                        MomentumState& state) {
  if (g.d_w.rows() != p.num_visible() || g.d_w.cols() != p.num_hidden() ||
      g.d_b.size() != p.num_visible() || g.d_c.size() != p.num_hidden()) {
    throw ContractError("gradient shape does not match the model");
  }
  if (!state.previous) state.previous = GradientSet::zeros_like(p);
  GradientSet& upd = *state.previous;

  upd.d_w = momentum * upd.d_w + cfg.learning_rate_w * g.d_w;
  if (column_cap) restrict_column_norms(upd.d_w, *column_cap);
  upd.d_b = momentum * upd.d_b + cfg.learning_rate_b * g.d_b;
  upd.d_c = momentum * upd.d_c + cfg.lr_c() * g.d_c;

  p.weights += upd.d_w;
  p.visible_bias += upd.d_b;
  p.hidden_bias += upd.d_c;
  if (cfg.learn_sigma) {
    upd.d_sigma = momentum * upd.d_sigma + cfg.learning_rate_sigma * g.d_sigma;
    p.sigma = std::max(p.sigma + upd.d_sigma, kSigmaFloor);
  } else {
    upd.d_sigma = 0.0;
  }
  state.last_max_column_norm = upd.d_w.colwise().norm().maxCoeff();
  return p;
}

namespace {

double monitor_score(const DataBatch& d, const GrbmParams& p, const TrainConfig& cfg,
                     double& log_z) {
  switch (cfg.monitor) {
    case Monitor::none:
      return std::numeric_limits<double>::quiet_NaN();
    case Monitor::exact:
      if (p.num_hidden() > cfg.enumeration_cap) return std::numeric_limits<double>::quiet_NaN();
      log_z = log_partition_exact(p, cfg.enumeration_cap);
      return avg_log_likelihood(d, p, log_z);
    case Monitor::ais:
      log_z = ais_log_partition(p, cfg.monitor_ais).log_partition;
      return avg_log_likelihood(d, p, log_z);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TrainResult train(const DataBatch& data, Index num_hidden, const TrainConfig& cfg,
                  const DataBatch* monitor_data) {
  cfg.validate(data.rows());
  if (num_hidden < 1) throw ContractError("need at least one hidden unit");
  const DataBatch& monitor_set = monitor_data != nullptr ? *monitor_data : data;
  if (monitor_set.cols() != data.cols()) throw ContractError("monitor data dimension mismatch");

  const Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng order_rng = root.split(1);
  Rng chain_rng = root.split(2);

  TrainResult result;
  result.params = init_params(data, num_hidden, cfg, init_rng);
  GrbmParams& params = result.params;
  TrainHistory& history = result.history;

  std::optional<double> cap = cfg.grad_norm_cap;
  if (!cap && cfg.grad_norm_cap_data_fraction) {
    cap = *cfg.grad_norm_cap_data_fraction * max_data_norm(data);
  }
  history.column_cap = cap;

  const Index rows = data.rows();
  const Index batch_size = cfg.batch_size;
  const Index chains = cfg.num_chains > 0 ? cfg.num_chains : batch_size;
  std::vector<Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Index{0});

  MomentumState momentum_state;
  SamplerState sampler;
  DataBatch batch;

  for (int epoch = 0; epoch < cfg.epochs && !history.diverged; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    // Fisher-Yates with the library generator so the order is portable.
    for (Index i = rows - 1; i > 0; --i) {
      const auto j = static_cast<Index>(order_rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    const double momentum = cfg.momentum.at(epoch, cfg.epochs);
    double epoch_max_column = 0.0;

    for (Index first = 0; first < rows; first += batch_size) {
      const Index count = std::min(batch_size, rows - first);
      batch.resize(count, data.cols());
      for (Index r = 0; r < count; ++r) batch.row(r) = data.row(order[first + r]);

      GradientSet gradient = positive_phase(batch, params);
      switch (cfg.method) {
        case Method::cd:
          gradient -= cd_negative_phase(batch, params, cfg.k_steps, chain_rng).stats;
          break;
        case Method::pcd:
          if (!sampler.initialized()) {
            sampler = SamplerState::persistent(batch, chains, num_hidden);
          }
          gradient -= pcd_negative_phase(params, sampler, cfg.k_steps, chain_rng);
          break;
        case Method::pt:
          if (!sampler.initialized()) {
            sampler = SamplerState::tempered(batch, chains, num_hidden, cfg.pt_temperatures);
          }
          gradient -= pt_negative_phase(params, sampler, cfg.k_steps, chain_rng);
          break;
      }
      params = apply_update(std::move(params), gradient, cfg, momentum, cap, momentum_state);
      epoch_max_column = std::max(epoch_max_column, momentum_state.last_max_column_norm);
      if (!params.all_finite() || !gradient.all_finite()) {
        history.diverged = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.momentum = momentum;
    rec.max_update_column_norm = epoch_max_column;
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool last = epoch + 1 == cfg.epochs;
    if (!history.diverged && ((epoch + 1) % cfg.monitor_every == 0 || last)) {
      rec.avg_log_likelihood = monitor_score(monitor_set, params, cfg, rec.log_partition);
    }
    history.epochs.push_back(rec);
  }
  return result;
}

std::vector<long> activated_units_histogram(const GrbmParams& p, const DataBatch& d, Rng& rng) {
  if (d.cols() != p.num_visible()) throw ContractError("data dimension does not match the model");
  std::vector<long> hist(static_cast<std::size_t>(p.num_hidden()) + 1, 0);
  std::vector<double> h(p.num_hidden());
  for (Index l = 0; l < d.rows(); ++l) {
    detail::sample_hidden(row_span(d, l), p, rng, h);
    const auto active = static_cast<std::size_t>(std::accumulate(h.begin(), h.end(), 0.0));
    ++hist[active];
  }
  return hist;
}

double mean_activated_units(const std::vector<long>& histogram) {
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    total += static_cast<double>(histogram[k]);
    weighted += static_cast<double>(k) * static_cast<double>(histogram[k]);
  }
  return total > 0.0 ? weighted / total : 0.0;
}

}  // namespace grbm
