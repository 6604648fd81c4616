#pragma once

// Exact density analysis of a GRBM by enumerating all 2^N hidden states.
//
// Marginalizing x out of the joint gives the prior over hidden states
//   P(h) = (2 pi sigma^2)^(M/2) exp(c^T h + (||b + W h||^2 - ||b||^2) / (2 sigma^2)) / Z
// so the visible marginal is an isotropic mixture of 2^N Gaussians with means
// b + W h and shared variance sigma^2. Equivalently it is a product of N
// two-mode experts. All three forms are exposed so they can be cross-checked.

#include <cstdint>
#include <functional>
#include <vector>

#include "grbm/gradient.hpp"
#include "grbm/model.hpp"

namespace grbm {

inline constexpr int kDefaultEnumerationCap = 25;

// Throws EnumerationError when N > cap.
void require_enumerable(const GrbmParams& p, int cap = kDefaultEnumerationCap);

// Hidden state h encoded as bits: bit j is h_j.
Vector hidden_state_from_bits(std::uint64_t bits, Index num_hidden);
std::uint64_t hidden_state_bits(const Vector& h);

// ln of the unnormalized prior weight Z * P(h).
double log_hidden_weight(const Vector& h, const GrbmParams& p);

double log_partition_exact(const GrbmParams& p, int cap = kDefaultEnumerationCap);

double log_hidden_marginal(const Vector& h, const GrbmParams& p, double log_partition);
double hidden_marginal(const Vector& h, const GrbmParams& p, int cap = kDefaultEnumerationCap);

struct MixtureComponent {
  Vector hidden_state;
  Vector mean;  // b + W h
  double log_weight;  // ln P(h)
};

struct MixtureView {
  std::vector<MixtureComponent> components;  // indexed by hidden_state_bits
  Vector order_mass;  // mass of states with exactly k active units, k = 0..N
  double log_partition = 0.0;
  double sigma = 1.0;

  // ln sum_h P(h) N(x; b + W h, sigma^2 I)
  double log_pdf(const Vector& x) const;
  double anchor_mass() const { return order_mass[0]; }
};

MixtureView mixture_view(const GrbmParams& p, int cap = kDefaultEnumerationCap);

// Order masses without materializing the components.
Vector order_mass(const GrbmParams& p, int cap = kDefaultEnumerationCap);

// ln sum_h exp(-E(x, h)) = -||x - b||^2 / (2 sigma^2) + sum_j softplus(c_j + x^T w_j / sigma^2).
// O(MN); no enumeration.
double unnormalized_log_marginal(const Vector& x, const GrbmParams& p);
double unnormalized_log_marginal(std::span<const double> x, const GrbmParams& p);

double log_pdf(const Vector& x, const GrbmParams& p, double log_partition);
double log_pdf(const Vector& x, const GrbmParams& p, int cap = kDefaultEnumerationCap);

double avg_log_likelihood(const DataBatch& d, const GrbmParams& p, double log_partition);
double avg_log_likelihood(const DataBatch& d, const GrbmParams& p,
                          int cap = kDefaultEnumerationCap);

struct ExpertEval {
  Vector expert_logs;  // ln p_j(x), j = 0..N-1
  double log_partition = 0.0;

  double log_pdf() const { return expert_logs.sum() - log_partition; }
};

// Each expert is (2 pi N sigma^2)^(M/2) [N(x; b, N sigma^2) + s_j N(x; b + N w_j, N sigma^2)]
// with s_j = exp((||b + N w_j||^2 - ||b||^2) / (2 N sigma^2) + c_j).
ExpertEval poe_expert_logs(const Vector& x, const GrbmParams& p, double log_partition);
ExpertEval poe_expert_logs(const Vector& x, const GrbmParams& p,
                           int cap = kDefaultEnumerationCap);

struct Box2d {
  double x_min, x_max, y_min, y_max;
};

// Hull of all component means padded by `pad_sigmas` standard deviations.
Box2d component_hull(const GrbmParams& p, double pad_sigmas = 8.0,
                     int cap = kDefaultEnumerationCap);

// Midpoint-rule integral of the normalized density over `box` (M = 2 only).
double numeric_integral_2d(const GrbmParams& p, const Box2d& box, double step = 0.01,
                           int cap = kDefaultEnumerationCap);

// Model expectation of the phase statistics, computed as
// sum_h P(h) E_{x ~ N(b + W h, sigma^2)}[-dE/dtheta] in closed form.
GradientSet exact_model_statistics(const GrbmParams& p, int cap = kDefaultEnumerationCap);

// Exact gradient of the average log-likelihood of `d`.
GradientSet exact_gradient(const DataBatch& d, const GrbmParams& p,
                           int cap = kDefaultEnumerationCap);

namespace detail {

// Visits every hidden state once (Gray-code order). The callback receives the
// state bits, the component mean b + W h and ln(Z P(h)).
void for_each_hidden_state(
    const GrbmParams& p,
    const std::function<void(std::uint64_t bits, const Vector& mean, double log_weight)>& visit,
    int cap = kDefaultEnumerationCap);

}  // namespace detail

}  // namespace grbm
