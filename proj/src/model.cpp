#include "grbm/model.hpp"

#include <string>

#include "grbm/kernels.hpp"

namespace grbm {

GrbmParams::GrbmParams(Matrix w, Vector b, Vector c, double s)
    : weights(std::move(w)), visible_bias(std::move(b)), hidden_bias(std::move(c)), sigma(s) {
  validate();
}

GrbmParams GrbmParams::zeros(Index num_visible, Index num_hidden, double sigma) {
  return GrbmParams(Matrix::Zero(num_visible, num_hidden), Vector::Zero(num_visible),
                    Vector::Zero(num_hidden), sigma);
}

bool GrbmParams::all_finite() const {
  return weights.allFinite() && visible_bias.allFinite() && hidden_bias.allFinite() &&
         std::isfinite(sigma);
}

void GrbmParams::validate() const {
  if (weights.rows() < 1 || weights.cols() < 1) {
    throw ContractError("GRBM needs at least one visible and one hidden unit");
  }
  if (visible_bias.size() != weights.rows() || hidden_bias.size() != weights.cols()) {
    throw ContractError("GRBM bias lengths do not match the weight matrix (" +
                        std::to_string(weights.rows()) + "x" + std::to_string(weights.cols()) +
                        ")");
  }
  if (!(sigma > 0.0)) throw ContractError("GRBM sigma must be positive");
  if (!all_finite()) throw ContractError("GRBM parameters contain non-finite entries");
}

namespace {

void require_visible(Index size, const GrbmParams& p) {
  if (size != p.num_visible()) {
    throw ContractError("visible vector has length " + std::to_string(size) + ", model expects " +
                        std::to_string(p.num_visible()));
  }
}

void require_hidden(Index size, const GrbmParams& p) {
  if (size != p.num_hidden()) {
    throw ContractError("hidden vector has length " + std::to_string(size) + ", model expects " +
                        std::to_string(p.num_hidden()));
  }
}

}  // namespace

namespace detail {

void hidden_preactivation(std::span<const double> x, const GrbmParams& p, std::span<double> out,
                          double beta) {
  const double inv_var = 1.0 / (p.sigma * p.sigma);
  for (Index j = 0; j < p.num_hidden(); ++j) {
    out[j] = beta * (p.hidden_bias[j] + kernels::dot(x, col_span(p.weights, j)) * inv_var);
  }
}

void hidden_probs(std::span<const double> x, const GrbmParams& p, std::span<double> out,
                  double beta) {
  hidden_preactivation(x, p, out, beta);
  for (double& v : out) v = logistic(v);
}

void sample_hidden(std::span<const double> x, const GrbmParams& p, Rng& rng,
                   std::span<double> h_out, double beta) {
  hidden_probs(x, p, h_out, beta);
  for (double& v : h_out) v = rng.uniform() < v ? 1.0 : 0.0;
}

void sample_visible(std::span<const double> h, const GrbmParams& p, Rng& rng,
                    std::span<double> x_out, double beta) {
  const Index m = p.num_visible();
  std::copy(p.visible_bias.data(), p.visible_bias.data() + m, x_out.begin());
  for (Index j = 0; j < p.num_hidden(); ++j) {
    if (h[j] != 0.0) kernels::axpy(h[j], col_span(p.weights, j), x_out);
  }
  const double sd = p.sigma / std::sqrt(beta);
  for (Index i = 0; i < m; ++i) x_out[i] += sd * rng.normal();
}

double energy(std::span<const double> x, std::span<const double> h, const GrbmParams& p) {
  const double var = p.sigma * p.sigma;
  double interaction = 0.0;
  double hidden_term = 0.0;
  for (Index j = 0; j < p.num_hidden(); ++j) {
    if (h[j] == 0.0) continue;
    interaction += h[j] * kernels::dot(x, col_span(p.weights, j));
    hidden_term += p.hidden_bias[j] * h[j];
  }
  return 0.5 * kernels::squared_distance(x, as_span(p.visible_bias)) / var - hidden_term -
         interaction / var;
}

}  // namespace detail

double energy(const Vector& x, const Vector& h, const GrbmParams& p) {
  require_visible(x.size(), p);
  require_hidden(h.size(), p);
  return detail::energy(as_span(x), as_span(h), p);
}

VisibleConditional visible_conditional(const Vector& h, const GrbmParams& p) {
  require_hidden(h.size(), p);
  return {p.visible_bias + p.weights * h, p.sigma};
}

Vector hidden_activation_probs(const Vector& x, const GrbmParams& p) {
  require_visible(x.size(), p);
  Vector out(p.num_hidden());
  detail::hidden_probs(as_span(x), p, as_span(out));
  return out;
}

Vector sample_hidden(const Vector& x, const GrbmParams& p, Rng& rng) {
  require_visible(x.size(), p);
  Vector h(p.num_hidden());
  detail::sample_hidden(as_span(x), p, rng, as_span(h));
  return h;
}

Vector sample_visible(const Vector& h, const GrbmParams& p, Rng& rng) {
  require_hidden(h.size(), p);
  Vector x(p.num_visible());
  detail::sample_visible(as_span(h), p, rng, as_span(x));
  return x;
}

GibbsStep gibbs_step(const Vector& x, const GrbmParams& p, Rng& rng) {
  Vector h = sample_hidden(x, p, rng);
  Vector next = sample_visible(h, p, rng);
  return {std::move(next), std::move(h)};
}

bool is_binary(const Vector& h) {
  return (h.array() == 0.0 || h.array() == 1.0).all();
}

}  // namespace grbm
