#pragma once

#include <cstdint>
#include <vector>

#include "grbm/model.hpp"

namespace grbm {

enum class BetaSchedule { linear, geometric_tail };

struct AisConfig {
  int num_chains = 100;
  int num_betas = 1000;
  BetaSchedule schedule = BetaSchedule::linear;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ascending inverse temperatures, first 0 and last 1.
//  linear:         evenly spaced.
//  geometric_tail: first half evenly spaced on [0, 0.5], then 1 - beta shrinks
//                  geometrically from 0.5 to 0.5 / num_betas, closing at 1.
std::vector<double> make_betas(int num_betas, BetaSchedule schedule);

struct AisResult {
  double log_partition = 0.0;
  double std_err = 0.0;  // jackknife over chains
  std::vector<double> log_weights;
};

// Annealed importance sampling from the GRBM with the same b and sigma but
// W = 0, c = 0 (ln Z = (M/2) ln(2 pi sigma^2) + N ln 2) towards `p`.
// Intermediate models scale W and c by beta; each chain takes one Gibbs sweep
// per intermediate model.
AisResult ais_log_partition(const GrbmParams& p, const AisConfig& cfg);
AisResult ais_log_partition(const GrbmParams& p, const AisConfig& cfg,
                            const std::vector<double>& betas);

double log_mean_exp(const std::vector<double>& values);

}  // namespace grbm
