#include "grbm/baselines.hpp"

#include <algorithm>
#include <numbers>

namespace grbm {

namespace {

// ln(2 cosh^2 y) = 2|y| + 2 ln(1 + e^(-2|y|)) - ln 2, stable for large |y|.
double log_two_cosh_sq(double y) {
  const double a = std::abs(y);
  return 2.0 * a + 2.0 * std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double log_abs_det(const Matrix& m, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(m);
  const double det = lu.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
    throw NumericError(std::string(what) + " is singular");
  }
  return std::log(std::abs(det));
}

double data_variance(const DataBatch& d, const Vector& mean) {
  const RowMatrix centered = d.rowwise() - mean.transpose();
  return centered.squaredNorm() / static_cast<double>(d.rows() * d.cols());
}

}  // namespace

// ---- FastICA ---------------------------------------------------------------

Matrix symmetric_decorrelation(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
  const Vector values = eig.eigenvalues();
  if (!(values.minCoeff() > 0.0)) throw NumericError("symmetric decorrelation of a singular matrix");
  const Matrix inv_sqrt =
      eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return inv_sqrt * w;
}

IcaModel fast_ica(const DataBatch& d, const IcaConfig& cfg, Rng& rng) {
  const Index m = d.cols();
  const Index l = d.rows();
  if (l < 2 || m < 1) throw DataError("FastICA needs at least two samples");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ContractError("invalid FastICA settings");

  Matrix w(m, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < m; ++i) w(i, j) = rng.normal();
  }
  w = symmetric_decorrelation(w);

  IcaModel out;
  const Matrix xt = d.transpose();  // M x L
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Matrix y = w * xt;  // M x L
    const Matrix g = y.array().tanh().matrix();
    const Vector g_prime_mean = (1.0 - g.array().square()).rowwise().mean().matrix();
    Matrix next = (g * d) / static_cast<double>(l) - g_prime_mean.asDiagonal() * w;
    next = symmetric_decorrelation(next);

    const double change = 1.0 - (next * w.transpose()).diagonal().cwiseAbs().minCoeff();
    w = std::move(next);
    out.iterations = it;
    if (change < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.unmixing = std::move(w);
  return out;
}

double ica_avg_ll(const DataBatch& d, const Matrix& unmixing) {
  if (unmixing.rows() != unmixing.cols() || unmixing.cols() != d.cols()) {
    throw ContractError("ICA unmixing must be square and match the data dimension");
  }
  const double log_det = log_abs_det(unmixing, "ICA unmixing matrix");
  const RowMatrix y = d * unmixing.transpose();
  double total = 0.0;
  for (Index l = 0; l < y.rows(); ++l) {
    for (Index j = 0; j < y.cols(); ++j) total += log_two_cosh_sq(y(l, j));
  }
  return -total / static_cast<double>(d.rows()) + log_det;
}

double true_bss_avg_ll(const DataBatch& d, const Matrix& unmixing_true) {
  if (unmixing_true.rows() != unmixing_true.cols() || unmixing_true.cols() != d.cols()) {
    throw ContractError("true unmixing matrix must be square and match the data dimension");
  }
  const double log_det = log_abs_det(unmixing_true, "true unmixing matrix");
  const RowMatrix s = d * unmixing_true.transpose();
  const double mean_abs = s.cwiseAbs().sum() / static_cast<double>(d.rows());
  // Each source contributes -sqrt(2)|s| - ln sqrt(2).
  return -std::numbers::sqrt2 * mean_abs - 0.5 * std::numbers::ln2 * static_cast<double>(d.cols()) +
         log_det;
}

// ---- isotropic Gaussian ----------------------------------------------------

IsotropicGaussian fit_isotropic_gaussian(const DataBatch& train) {
  if (train.rows() < 1 || train.cols() < 1) throw DataError("Gaussian fit of an empty batch");
  IsotropicGaussian g;
  g.mean = train.colwise().mean().transpose();
  g.variance = data_variance(train, g.mean);
  if (!(g.variance > 0.0)) throw DataError("Gaussian fit has zero variance");
  return g;
}

double gaussian_avg_ll(const DataBatch& d, const IsotropicGaussian& g) {
  if (d.cols() != g.mean.size()) throw ContractError("Gaussian dimension mismatch");
  const RowMatrix centered = d.rowwise() - g.mean.transpose();
  const double m = static_cast<double>(d.cols());
  return -0.5 * m * std::log(2.0 * std::numbers::pi * g.variance) -
         centered.squaredNorm() / (2.0 * g.variance * static_cast<double>(d.rows()));
}

double gaussian_avg_ll(const DataBatch& d) { return gaussian_avg_ll(d, fit_isotropic_gaussian(d)); }

// ---- isotropic mixture of Gaussians ------------------------------------------

namespace {

// Fills resp (L x K) with normalized responsibilities and returns the average
// log-likelihood. `sq_norms` holds ||x_l||^2.
double mog_e_step(const DataBatch& d, const Vector& sq_norms, const IsotropicMog& m, Matrix& resp) {
  const Index k = m.num_components();
  const double dims = static_cast<double>(d.cols());
  resp.noalias() = d * m.means;  // x_l^T mu_c
  for (Index c = 0; c < k; ++c) {
    const double log_norm =
        std::log(m.weights[c]) - 0.5 * dims * std::log(2.0 * std::numbers::pi * m.variances[c]);
    const double inv2v = 0.5 / m.variances[c];
    const double mu_sq = m.means.col(c).squaredNorm();
    resp.col(c) = (log_norm - inv2v * (sq_norms.array() - 2.0 * resp.col(c).array() + mu_sq)).matrix();
  }
  const Eigen::ArrayXd mx = resp.rowwise().maxCoeff().array();
  resp.array().colwise() -= mx;
  resp = resp.array().exp().matrix();
  const Eigen::ArrayXd total = resp.rowwise().sum().array();
  resp.array().colwise() /= total;
  return (mx + total.log()).sum() / static_cast<double>(d.rows());
}

}  // namespace

namespace {

IsotropicMog init_mog(const DataBatch& d, Index k, const Vector& mean, double var0, Rng& rng) {
  const Index l = d.rows();
  IsotropicMog m;
  m.means.resize(d.cols(), k);
  m.variances = Vector::Constant(k, var0);
  m.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
  if (k == 1) {
    m.means.col(0) = mean;
    return m;
  }
  // k-means++ seeding: each further mean is drawn with probability proportional
  // to the squared distance from the nearest mean chosen so far.
  m.means.col(0) = d.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(l)))).transpose();
  Vector nearest = (d.rowwise() - m.means.col(0).transpose()).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Index pick = l - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Index r = 0; r < l; ++r) {
        target -= nearest[r];
        if (target < 0.0) {
          pick = r;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(l)));
    }
    m.means.col(c) = d.row(pick).transpose();
    nearest = nearest.cwiseMin((d.rowwise() - m.means.col(c).transpose()).rowwise().squaredNorm());
  }
  return m;
}

// Continues EM on out.model for up to `iterations` steps, appending to the trace.
void run_em(const DataBatch& d, const MogConfig& cfg, int iterations, double var0, Rng& rng,
            MogResult& out) {
  const Index l = d.rows();
  const Index dims = d.cols();
  IsotropicMog& m = out.model;
  const Index k = m.num_components();
  const Vector sq_norms = d.rowwise().squaredNorm();
  Matrix resp;
  double prev = -std::numeric_limits<double>::infinity();
  bool reseeded = false;
  for (int it = 0; it < iterations; ++it) {
    const double ll = mog_e_step(d, sq_norms, m, resp);
    out.trace.push_back(ll);
    if (it > 0 && !reseeded && ll - prev < cfg.tol) return;
    prev = ll;
    reseeded = false;
    ++out.iterations;

    const Vector nk = resp.colwise().sum().transpose();
    const Matrix weighted_sums = d.transpose() * resp;  // M x K
    const Vector weighted_sq = resp.transpose() * sq_norms;
    double shared_ss = 0.0;
    for (Index c = 0; c < k; ++c) {
      if (!(nk[c] > 0.0)) {
        m.variances[c] = 0.0;
        m.weights[c] = 0.0;
        continue;
      }
      m.means.col(c) = weighted_sums.col(c) / nk[c];
      // sum_l r_lc ||x_l - mu_c||^2 = sum_l r_lc ||x_l||^2 - n_c ||mu_c||^2
      const double ss = std::max(0.0, weighted_sq[c] - nk[c] * m.means.col(c).squaredNorm());
      shared_ss += ss;
      m.variances[c] = ss / (static_cast<double>(dims) * nk[c]);
      m.weights[c] = nk[c] / static_cast<double>(l);
    }
    if (cfg.shared_variance) m.variances.setConstant(shared_ss / static_cast<double>(dims * l));
    for (Index c = 0; c < k; ++c) {
      if (m.variances[c] < cfg.variance_floor || !(m.weights[c] > 0.0)) {
        m.means.col(c) = d.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(l)))).transpose();
        m.variances[c] = var0;
        m.weights[c] = 1.0 / static_cast<double>(k);
        ++out.reseeds;
        reseeded = true;
      }
    }
    m.weights /= m.weights.sum();
  }
}

}  // namespace

MogResult em_isotropic_mog(const DataBatch& d, Index k, const MogConfig& cfg, Rng& rng) {
  if (k < 1) throw ContractError("MoG needs at least one component");
  if (d.rows() < k) throw DataError("fewer samples than mixture components");
  if (cfg.iterations < 0 || cfg.restarts < 1 ||
      !(cfg.variance_floor > 0.0)) {
    throw ContractError("invalid EM settings");
  }
  const Vector mean = d.colwise().mean().transpose();
  const double var0 = data_variance(d, mean);
  if (!(var0 > 0.0)) throw DataError("MoG fit on data with zero variance");

  // Independent starts, each run to convergence; the best training fit wins.
  MogResult best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    MogResult cand;
    cand.model = init_mog(d, k, mean, var0, rng);
    run_em(d, cfg, cfg.iterations, var0, rng, cand);
    cand.trace.push_back(mog_avg_ll(d, cand.model));
    if (r == 0 || cand.trace.back() > best_ll) {
      best_ll = cand.trace.back();
      best = std::move(cand);
    }
  }
  return best;
}

double mog_avg_ll(const DataBatch& d, const IsotropicMog& m) {
  if (d.cols() != m.dims()) throw ContractError("MoG dimension mismatch");
  Matrix resp;
  return mog_e_step(d, d.rowwise().squaredNorm(), m, resp);
}

Vector mog_order_mass(const IsotropicMog& m) {
  Vector w = m.weights;
  std::sort(w.data(), w.data() + w.size(), std::greater<>());
  return w;
}

// ---- Amari error -----------------------------------------------------------

double amari_error(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw ContractError("Amari error needs square matrices of equal size");
  }
  Eigen::FullPivLU<Matrix> lu(b);
  if (!lu.isInvertible()) throw NumericError("Amari error: B is singular");
  const Matrix p = (a * lu.inverse()).cwiseAbs();
  const Index n = p.rows();
  const Vector row_max = p.rowwise().maxCoeff();
  const Eigen::RowVectorXd col_max = p.colwise().maxCoeff();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) total += p(i, j) / row_max[i] + p(i, j) / col_max[j];
  }
  return total / (2.0 * static_cast<double>(n)) - 1.0;
}

// ---- recovery ------------------------------------------------------------

RecoveryResult classify_recovery(const Matrix& directions, const Matrix& unmixing_true,
                                 double threshold_deg) {
  if (directions.rows() != unmixing_true.cols()) throw ContractError("recovery dimension mismatch");
  const Index rows = unmixing_true.rows();
  const Index cols = directions.cols();
  RecoveryResult out;
  out.recovered = cols >= rows;
  std::vector<Index> used;
  for (Index i = 0; i < rows; ++i) {
    const Vector u = unmixing_true.row(i).transpose().normalized();
    double best = 180.0;
    Index arg = -1;
    for (Index j = 0; j < cols; ++j) {
      const double norm = directions.col(j).norm();
      if (!(norm > 0.0)) continue;
      const double c = std::min(1.0, std::abs(u.dot(directions.col(j)) / norm));
      const double deg = std::acos(c) * 180.0 / std::numbers::pi;
      if (deg < best) {
        best = deg;
        arg = j;
      }
    }
    out.angles_deg.push_back(best);
    if (arg < 0 || best > threshold_deg || std::find(used.begin(), used.end(), arg) != used.end()) {
      out.recovered = false;
    }
    used.push_back(arg);
  }
  return out;
}

}  // namespace grbm
