#pragma once

#include <span>

#include "grbm/common.hpp"
#include "grbm/rng.hpp"

namespace grbm {

/// Parameters of a Gaussian-binary RBM with M visible and N hidden units and a
/// single standard deviation shared by all visible units.
///
/// The joint density is exp(-E(x, h)) / Z with
///   E(x, h) = ||x - b||^2 / (2 sigma^2) - c^T h - x^T W h / sigma^2.
struct GrbmParams {
  Matrix weights;       // M x N, column j is the weight vector of hidden unit j
  Vector visible_bias;  // b, length M
  Vector hidden_bias;   // c, length N
  double sigma = 1.0;

  GrbmParams() = default;
  GrbmParams(Matrix w, Vector b, Vector c, double sigma);

  static GrbmParams zeros(Index num_visible, Index num_hidden, double sigma = 1.0);

  Index num_visible() const { return weights.rows(); }
  Index num_hidden() const { return weights.cols(); }

  // Throws ContractError unless shapes agree, M, N >= 1, sigma > 0 and every
  // entry is finite.
  void validate() const;
  bool all_finite() const;

  bool operator==(const GrbmParams&) const = default;
};

inline constexpr double kSigmaFloor = 1e-4;

double energy(const Vector& x, const Vector& h, const GrbmParams& p);

struct VisibleConditional {
  Vector mean;
  double sigma;
};

// P(x | h) = N(x; b + W h, sigma^2 I).
VisibleConditional visible_conditional(const Vector& h, const GrbmParams& p);

// P(h_j = 1 | x) = logistic(c_j + x^T w_j / sigma^2).
Vector hidden_activation_probs(const Vector& x, const GrbmParams& p);

Vector sample_hidden(const Vector& x, const GrbmParams& p, Rng& rng);
Vector sample_visible(const Vector& h, const GrbmParams& p, Rng& rng);

struct GibbsStep {
  Vector visible;
  Vector hidden;
};

// h ~ P(h | x), then x' ~ P(x' | h).
GibbsStep gibbs_step(const Vector& x, const GrbmParams& p, Rng& rng);

bool is_binary(const Vector& h);

// Span-based forms used on the hot paths. `beta` scales the whole energy
// (tempered distribution exp(-beta E)); beta = 1 is the model itself.
namespace detail {

// out[j] = beta * (c_j + x^T w_j / sigma^2)
void hidden_preactivation(std::span<const double> x, const GrbmParams& p, std::span<double> out,
                          double beta = 1.0);
void hidden_probs(std::span<const double> x, const GrbmParams& p, std::span<double> out,
                  double beta = 1.0);
void sample_hidden(std::span<const double> x, const GrbmParams& p, Rng& rng,
                   std::span<double> h_out, double beta = 1.0);
// x ~ N(b + W h, sigma^2 / beta)
void sample_visible(std::span<const double> h, const GrbmParams& p, Rng& rng,
                    std::span<double> x_out, double beta = 1.0);
double energy(std::span<const double> x, std::span<const double> h, const GrbmParams& p);

}  // namespace detail

}  // namespace grbm
