#include "grbm/exact.hpp"

#include <bit>
#include <string>

#include "grbm/kernels.hpp"

namespace grbm {

namespace {

// Incrementally updated means drift by one rounding error per flip; refresh
// them from scratch at this period.
constexpr std::uint64_t kRefreshPeriod = 256;

double log_gaussian_normalizer(const GrbmParams& p) {
  return 0.5 * static_cast<double>(p.num_visible()) * (kLog2Pi + 2.0 * std::log(p.sigma));
}

void recompute_mean(const GrbmParams& p, std::uint64_t bits, Vector& mean) {
  mean = p.visible_bias;
  for (Index j = 0; j < p.num_hidden(); ++j) {
    if ((bits >> j) & 1U) kernels::axpy(1.0, col_span(p.weights, j), as_span(mean));
  }
}

}  // namespace

void require_enumerable(const GrbmParams& p, int cap) {
  if (p.num_hidden() > cap || p.num_hidden() > 62) {
    throw EnumerationError("exact enumeration infeasible: N = " + std::to_string(p.num_hidden()) +
                           " exceeds the cap of " + std::to_string(cap) + " hidden units");
  }
}

Vector hidden_state_from_bits(std::uint64_t bits, Index num_hidden) {
  Vector h(num_hidden);
  for (Index j = 0; j < num_hidden; ++j) h[j] = ((bits >> j) & 1U) ? 1.0 : 0.0;
  return h;
}

std::uint64_t hidden_state_bits(const Vector& h) {
  std::uint64_t bits = 0;
  for (Index j = 0; j < h.size(); ++j) {
    if (h[j] != 0.0) bits |= (std::uint64_t{1} << j);
  }
  return bits;
}

namespace detail {

void for_each_hidden_state(
    const GrbmParams& p,
    const std::function<void(std::uint64_t, const Vector&, double)>& visit, int cap) {
  require_enumerable(p, cap);
  const Index n = p.num_hidden();
  const double inv_two_var = 0.5 / (p.sigma * p.sigma);
  const double base = log_gaussian_normalizer(p);
  const double b_norm = p.visible_bias.squaredNorm();
  const std::uint64_t count = std::uint64_t{1} << n;

  Vector mean = p.visible_bias;
  std::uint64_t gray = 0;
  double bias_term = 0.0;
  for (std::uint64_t k = 0; k < count; ++k) {
    if (k > 0) {
      const int flip = std::countr_zero(k);
      const std::uint64_t mask = std::uint64_t{1} << flip;
      gray ^= mask;
      const bool on = (gray & mask) != 0;
      if (k % kRefreshPeriod == 0) {
        recompute_mean(p, gray, mean);
        bias_term = 0.0;
        for (Index j = 0; j < n; ++j) {
          if ((gray >> j) & 1U) bias_term += p.hidden_bias[j];
        }
      } else {
        kernels::axpy(on ? 1.0 : -1.0, col_span(p.weights, flip), as_span(mean));
        bias_term += on ? p.hidden_bias[flip] : -p.hidden_bias[flip];
      }
    }
    const double lw =
        base + bias_term + (kernels::dot(as_span(mean), as_span(mean)) - b_norm) * inv_two_var;
    visit(gray, mean, lw);
  }
}

}  // namespace detail

double log_hidden_weight(const Vector& h, const GrbmParams& p) {
  if (h.size() != p.num_hidden()) throw ContractError("hidden state length mismatch");
  const Vector mean = p.visible_bias + p.weights * h;
  return log_gaussian_normalizer(p) + p.hidden_bias.dot(h) +
         (mean.squaredNorm() - p.visible_bias.squaredNorm()) * 0.5 / (p.sigma * p.sigma);
}

double log_partition_exact(const GrbmParams& p, int cap) {
  LogSumExp acc;
  detail::for_each_hidden_state(
      p, [&](std::uint64_t, const Vector&, double lw) { acc.add(lw); }, cap);
  return acc.value();
}

double log_hidden_marginal(const Vector& h, const GrbmParams& p, double log_partition) {
  return log_hidden_weight(h, p) - log_partition;
}

double hidden_marginal(const Vector& h, const GrbmParams& p, int cap) {
  return std::exp(log_hidden_marginal(h, p, log_partition_exact(p, cap)));
}

double MixtureView::log_pdf(const Vector& x) const {
  if (components.empty()) throw ContractError("empty mixture");
  const double var = sigma * sigma;
  const double norm = 0.5 * static_cast<double>(x.size()) * (kLog2Pi + std::log(var));
  LogSumExp acc;
  for (const auto& comp : components) {
    acc.add(comp.log_weight - norm -
            0.5 * kernels::squared_distance(as_span(x), as_span(comp.mean)) / var);
  }
  return acc.value();
}

MixtureView mixture_view(const GrbmParams& p, int cap) {
  require_enumerable(p, cap);
  const Index n = p.num_hidden();
  MixtureView view;
  view.sigma = p.sigma;
  view.components.resize(std::size_t{1} << n);
  LogSumExp acc;
  detail::for_each_hidden_state(
      p,
      [&](std::uint64_t bits, const Vector& mean, double lw) {
        auto& comp = view.components[bits];
        comp.hidden_state = hidden_state_from_bits(bits, n);
        comp.mean = mean;
        comp.log_weight = lw;
        acc.add(lw);
      },
      cap);
  view.log_partition = acc.value();

  std::vector<LogSumExp> per_order(static_cast<std::size_t>(n) + 1);
  for (std::size_t bits = 0; bits < view.components.size(); ++bits) {
    auto& comp = view.components[bits];
    comp.log_weight -= view.log_partition;
    per_order[std::popcount(bits)].add(comp.log_weight);
  }
  view.order_mass.resize(n + 1);
  for (Index k = 0; k <= n; ++k) view.order_mass[k] = std::exp(per_order[k].value());
  return view;
}

Vector order_mass(const GrbmParams& p, int cap) {
  const Index n = p.num_hidden();
  std::vector<LogSumExp> per_order(static_cast<std::size_t>(n) + 1);
  LogSumExp total;
  detail::for_each_hidden_state(
      p,
      [&](std::uint64_t bits, const Vector&, double lw) {
        per_order[std::popcount(bits)].add(lw);
        total.add(lw);
      },
      cap);
  const double log_z = total.value();
  Vector mass(n + 1);
  for (Index k = 0; k <= n; ++k) mass[k] = std::exp(per_order[k].value() - log_z);
  return mass;
}

double unnormalized_log_marginal(std::span<const double> x, const GrbmParams& p) {
  const double var = p.sigma * p.sigma;
  double acc = -0.5 * kernels::squared_distance(x, as_span(p.visible_bias)) / var;
  for (Index j = 0; j < p.num_hidden(); ++j) {
    acc += softplus(p.hidden_bias[j] + kernels::dot(x, col_span(p.weights, j)) / var);
  }
  return acc;
}

double unnormalized_log_marginal(const Vector& x, const GrbmParams& p) {
  if (x.size() != p.num_visible()) throw ContractError("visible vector length mismatch");
  return unnormalized_log_marginal(as_span(x), p);
}

double log_pdf(const Vector& x, const GrbmParams& p, double log_partition) {
  return unnormalized_log_marginal(x, p) - log_partition;
}

double log_pdf(const Vector& x, const GrbmParams& p, int cap) {
  return log_pdf(x, p, log_partition_exact(p, cap));
}

double avg_log_likelihood(const DataBatch& d, const GrbmParams& p, double log_partition) {
  if (d.cols() != p.num_visible()) throw ContractError("data dimension does not match the model");
  if (d.rows() < 1) throw ContractError("average log-likelihood needs at least one sample");
  double acc = 0.0;
  for (Index l = 0; l < d.rows(); ++l) acc += unnormalized_log_marginal(row_span(d, l), p);
  return acc / static_cast<double>(d.rows()) - log_partition;
}

double avg_log_likelihood(const DataBatch& d, const GrbmParams& p, int cap) {
  return avg_log_likelihood(d, p, log_partition_exact(p, cap));
}

ExpertEval poe_expert_logs(const Vector& x, const GrbmParams& p, double log_partition) {
  if (x.size() != p.num_visible()) throw ContractError("visible vector length mismatch");
  const Index n = p.num_hidden();
  const double nn = static_cast<double>(n);
  const double spread = 2.0 * nn * p.sigma * p.sigma;
  const double b_norm = p.visible_bias.squaredNorm();
  const double first = -(x - p.visible_bias).squaredNorm() / spread;

  ExpertEval out;
  out.log_partition = log_partition;
  out.expert_logs.resize(n);
  for (Index j = 0; j < n; ++j) {
    const Vector shifted = p.visible_bias + nn * p.weights.col(j);
    const double log_scale = (shifted.squaredNorm() - b_norm) / spread + p.hidden_bias[j];
    const double second = log_scale - (x - shifted).squaredNorm() / spread;
    out.expert_logs[j] = log_add_exp(first, second);
  }
  return out;
}

ExpertEval poe_expert_logs(const Vector& x, const GrbmParams& p, int cap) {
  return poe_expert_logs(x, p, log_partition_exact(p, cap));
}

Box2d component_hull(const GrbmParams& p, double pad_sigmas, int cap) {
  if (p.num_visible() != 2) throw ContractError("component hull is defined for M = 2 only");
  Box2d box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  detail::for_each_hidden_state(
      p,
      [&](std::uint64_t, const Vector& mean, double) {
        box.x_min = std::min(box.x_min, mean[0]);
        box.x_max = std::max(box.x_max, mean[0]);
        box.y_min = std::min(box.y_min, mean[1]);
        box.y_max = std::max(box.y_max, mean[1]);
      },
      cap);
  const double pad = pad_sigmas * p.sigma;
  return {box.x_min - pad, box.x_max + pad, box.y_min - pad, box.y_max + pad};
}

double numeric_integral_2d(const GrbmParams& p, const Box2d& box, double step, int cap) {
  if (p.num_visible() != 2) throw ContractError("2-D quadrature requires M = 2");
  if (!(step > 0.0) || !(box.x_max > box.x_min) || !(box.y_max > box.y_min)) {
    throw ContractError("invalid quadrature box or step");
  }
  const double log_z = log_partition_exact(p, cap);
  const auto nx = static_cast<Index>(std::ceil((box.x_max - box.x_min) / step));
  const auto ny = static_cast<Index>(std::ceil((box.y_max - box.y_min) / step));
  const double dx = (box.x_max - box.x_min) / static_cast<double>(nx);
  const double dy = (box.y_max - box.y_min) / static_cast<double>(ny);
  double total = 0.0;
  double point[2];
  for (Index ix = 0; ix < nx; ++ix) {
    point[0] = box.x_min + (static_cast<double>(ix) + 0.5) * dx;
    double column = 0.0;
    for (Index iy = 0; iy < ny; ++iy) {
      point[1] = box.y_min + (static_cast<double>(iy) + 0.5) * dy;
      column += std::exp(unnormalized_log_marginal(std::span<const double>(point, 2), p) - log_z);
    }
    total += column;
  }
  return total * dx * dy;
}

GradientSet exact_model_statistics(const GrbmParams& p, int cap) {
  const double log_z = log_partition_exact(p, cap);
  const Index m = p.num_visible();
  const double var = p.sigma * p.sigma;
  const double md = static_cast<double>(m);
  GradientSet acc = GradientSet::zeros_like(p);
  Vector shift(m);
  detail::for_each_hidden_state(
      p,
      [&](std::uint64_t bits, const Vector& mean, double lw) {
        const double prob = std::exp(lw - log_z);
        shift = mean - p.visible_bias;
        acc.d_b += prob * shift;
        for (Index j = 0; j < p.num_hidden(); ++j) {
          if ((bits >> j) & 1U) {
            acc.d_c[j] += prob;
            kernels::axpy(prob, as_span(mean), col_span(acc.d_w, j));
          }
        }
        acc.d_sigma +=
            prob * (md * var - shift.squaredNorm() - 2.0 * p.visible_bias.dot(shift));
      },
      cap);
  acc.d_b /= var;
  acc.d_w /= var;
  acc.d_sigma /= var * p.sigma;
  return acc;
}

GradientSet exact_gradient(const DataBatch& d, const GrbmParams& p, int cap) {
  return phase_statistics(d, p) - exact_model_statistics(p, cap);
}

}  // namespace grbm
