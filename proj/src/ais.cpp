#include "grbm/ais.hpp"

#include <string>

#include "grbm/kernels.hpp"

namespace grbm {

void AisConfig::validate() const {
  if (num_chains < 1) throw ContractError("AIS needs at least one chain");
  if (num_betas < 2) throw ContractError("AIS needs at least two inverse temperatures");
}

std::vector<double> make_betas(int num_betas, BetaSchedule schedule) {
  if (num_betas < 2) throw ContractError("AIS needs at least two inverse temperatures");
  std::vector<double> betas(static_cast<std::size_t>(num_betas));
  const auto last = static_cast<double>(num_betas - 1);
  switch (schedule) {
    case BetaSchedule::linear:
      for (int k = 0; k < num_betas; ++k) betas[k] = static_cast<double>(k) / last;
      break;
    case BetaSchedule::geometric_tail: {
      const int head = num_betas / 2;
      for (int k = 0; k < head; ++k) betas[k] = 0.5 * static_cast<double>(k) / head;
      const int tail = num_betas - head - 1;  // points strictly between 0.5 and 1
      const double floor_gap = 0.5 / static_cast<double>(num_betas);
      for (int t = 0; t < tail; ++t) {
        const double frac = tail > 1 ? static_cast<double>(t) / (tail - 1) : 0.0;
        betas[head + t] = 1.0 - 0.5 * std::pow(floor_gap / 0.5, frac);
      }
      betas.back() = 1.0;
      break;
    }
  }
  betas.front() = 0.0;
  return betas;
}

double log_mean_exp(const std::vector<double>& values) {
  if (values.empty()) throw ContractError("log_mean_exp of an empty set");
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

namespace {

void validate_betas(const std::vector<double>& betas) {
  if (betas.size() < 2) throw ContractError("AIS needs at least two inverse temperatures");
  if (betas.front() != 0.0 || betas.back() != 1.0) {
    throw ContractError("AIS schedule must start at 0 and end at 1");
  }
  for (std::size_t k = 1; k < betas.size(); ++k) {
    if (!(betas[k] >= betas[k - 1]) || betas[k] > 1.0) {
      throw ContractError("AIS schedule must be ascending within [0, 1]");
    }
  }
}

// Jackknife standard error of log_mean_exp over the chains.
double jackknife_std_err(const std::vector<double>& logw) {
  const std::size_t n = logw.size();
  if (n < 2) return 0.0;
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logw) mx = std::max(mx, v);
  std::vector<double> scaled(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = std::exp(logw[i] - mx);
    total += scaled[i];
  }
  std::vector<double> loo(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rest = total - scaled[i];
    if (rest > 1e-8 * total) {
      loo[i] = mx + std::log(rest / static_cast<double>(n - 1));
    } else {
      std::vector<double> others;
      others.reserve(n - 1);
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i) others.push_back(logw[k]);
      }
      loo[i] = log_mean_exp(others);
    }
    mean += loo[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace

AisResult ais_log_partition(const GrbmParams& p, const AisConfig& cfg) {
  cfg.validate();
  return ais_log_partition(p, cfg, make_betas(cfg.num_betas, cfg.schedule));
}

AisResult ais_log_partition(const GrbmParams& p, const AisConfig& cfg,
                            const std::vector<double>& betas) {
  cfg.validate();
  validate_betas(betas);
  p.validate();
  const Index m = p.num_visible();
  const Index n = p.num_hidden();
  const double var = p.sigma * p.sigma;
  const double log_z_base =
      0.5 * static_cast<double>(m) * (kLog2Pi + std::log(var)) + static_cast<double>(n) * std::log(2.0);

  AisResult out;
  out.log_weights.resize(static_cast<std::size_t>(cfg.num_chains));
  Vector x(m);
  Vector act(n);
  std::vector<double> h(n);

  for (int chain = 0; chain < cfg.num_chains; ++chain) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(chain));
    for (Index i = 0; i < m; ++i) x[i] = p.visible_bias[i] + p.sigma * rng.normal();
    double logw = 0.0;
    for (std::size_t k = 1; k < betas.size(); ++k) {
      // Unnormalized log marginals differ only in the softplus terms.
      for (Index j = 0; j < n; ++j) {
        act[j] = p.hidden_bias[j] + kernels::dot(as_span(x), col_span(p.weights, j)) / var;
        logw += softplus(betas[k] * act[j]) - softplus(betas[k - 1] * act[j]);
      }
      if (k + 1 == betas.size()) break;
      const double beta = betas[k];
      for (Index j = 0; j < n; ++j) h[j] = rng.uniform() < logistic(beta * act[j]) ? 1.0 : 0.0;
      x = p.visible_bias;
      for (Index j = 0; j < n; ++j) {
        if (h[j] != 0.0) kernels::axpy(beta, col_span(p.weights, j), as_span(x));
      }
      for (Index i = 0; i < m; ++i) x[i] += p.sigma * rng.normal();
    }
    out.log_weights[static_cast<std::size_t>(chain)] = logw;
  }

  out.log_partition = log_z_base + log_mean_exp(out.log_weights);
  out.std_err = jackknife_std_err(out.log_weights);
  if (!std::isfinite(out.log_partition)) throw NumericError("AIS produced a non-finite estimate");
  return out;
}

}  // namespace grbm
