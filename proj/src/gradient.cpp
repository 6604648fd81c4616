#include "grbm/gradient.hpp"

#include <vector>

#include "grbm/kernels.hpp"

namespace grbm {

GradientSet GradientSet::zeros(Index num_visible, Index num_hidden) {
  return {Matrix::Zero(num_visible, num_hidden), Vector::Zero(num_visible),
          Vector::Zero(num_hidden), 0.0};
}

bool GradientSet::all_finite() const {
  return d_w.allFinite() && d_b.allFinite() && d_c.allFinite() && std::isfinite(d_sigma);
}

double GradientSet::max_abs_diff(const GradientSet& o) const {
  double m = std::abs(d_sigma - o.d_sigma);
  if (d_w.size() > 0) m = std::max(m, (d_w - o.d_w).cwiseAbs().maxCoeff());
  if (d_b.size() > 0) m = std::max(m, (d_b - o.d_b).cwiseAbs().maxCoeff());
  if (d_c.size() > 0) m = std::max(m, (d_c - o.d_c).cwiseAbs().maxCoeff());
  return m;
}

GradientSet& GradientSet::operator+=(const GradientSet& o) {
  d_w += o.d_w;
  d_b += o.d_b;
  d_c += o.d_c;
  d_sigma += o.d_sigma;
  return *this;
}

GradientSet& GradientSet::operator-=(const GradientSet& o) {
  d_w -= o.d_w;
  d_b -= o.d_b;
  d_c -= o.d_c;
  d_sigma -= o.d_sigma;
  return *this;
}

GradientSet& GradientSet::operator*=(double s) {
  d_w *= s;
  d_b *= s;
  d_c *= s;
  d_sigma *= s;
  return *this;
}

GradientSet operator-(GradientSet a, const GradientSet& b) { return a -= b; }
GradientSet operator+(GradientSet a, const GradientSet& b) { return a += b; }

GradientSet phase_statistics(const DataBatch& samples, const GrbmParams& p) {
  const Index m = p.num_visible();
  const Index n = p.num_hidden();
  if (samples.cols() != m) throw ContractError("sample dimension does not match the model");
  if (samples.rows() < 1) throw ContractError("phase statistics need at least one sample");

  GradientSet acc = GradientSet::zeros(m, n);
  std::vector<double> prob(n);
  Vector x_sum = Vector::Zero(m);
  double sq_sum = 0.0;
  double interaction_sum = 0.0;

  for (Index l = 0; l < samples.rows(); ++l) {
    const auto x = row_span(samples, l);
    detail::hidden_probs(x, p, prob);
    kernels::axpy(1.0, x, as_span(x_sum));
    sq_sum += kernels::squared_distance(x, as_span(p.visible_bias));
    for (Index j = 0; j < n; ++j) {
      acc.d_c[j] += prob[j];
      // Accumulate x p_j into column j; the 1/sigma^2 factor is applied once below.
      kernels::axpy(prob[j], x, col_span(acc.d_w, j));
      interaction_sum += prob[j] * kernels::dot(x, col_span(p.weights, j));
    }
  }

  const double inv_l = 1.0 / static_cast<double>(samples.rows());
  const double var = p.sigma * p.sigma;
  acc.d_b = (x_sum * inv_l - p.visible_bias) / var;
  acc.d_c *= inv_l;
  acc.d_w *= inv_l / var;
  acc.d_sigma = (sq_sum - 2.0 * interaction_sum) * inv_l / (var * p.sigma);
  return acc;
}

}  // namespace grbm
