#pragma once

#include <vector>

#include "grbm/bss.hpp"
#include "grbm/common.hpp"
#include "grbm/rng.hpp"

namespace grbm {

// ---- FastICA ---------------------------------------------------------------

struct IcaModel {
  Matrix unmixing;  // rows w_j^T, orthonormal after symmetric decorrelation
  int iterations = 0;
  bool converged = false;
};

struct IcaConfig {
  double tol = 1e-8;  // on 1 - min_j |<w_j(new), w_j(old)>|
  int max_iter = 1000;
};

// Symmetric fixed-point FastICA with the tanh (log cosh) contrast on whitened
// data. Non-convergence is reported through `converged`, not thrown.
IcaModel fast_ica(const DataBatch& d, const IcaConfig& cfg, Rng& rng);

// W <- (W W^T)^(-1/2) W.
Matrix symmetric_decorrelation(const Matrix& w);

// -<sum_j ln(2 cosh^2(w_j^T x))> + ln|det W|: the exact log-density when the
// sources have density 1 / (2 cosh^2 s), i.e. logistic.
double ica_avg_ll(const DataBatch& d, const Matrix& unmixing);
inline double ica_avg_ll(const DataBatch& d, const IcaModel& m) { return ica_avg_ll(d, m.unmixing); }

// Exact average log-density of whitened data under the true generating
// distribution (unit-variance Laplacian sources, unmixing U).
double true_bss_avg_ll(const DataBatch& d, const Matrix& unmixing_true);
inline double true_bss_avg_ll(const DataBatch& d, const BssGroundTruth& truth) {
  return true_bss_avg_ll(d, truth.unmixing_true);
}

// ---- isotropic Gaussian ----------------------------------------------------

struct IsotropicGaussian {
  Vector mean;
  double variance = 1.0;
};

IsotropicGaussian fit_isotropic_gaussian(const DataBatch& train);
double gaussian_avg_ll(const DataBatch& d, const IsotropicGaussian& g);
// Fit on `d` and evaluate on `d`.
double gaussian_avg_ll(const DataBatch& d);

// ---- isotropic mixture of Gaussians ------------------------------------------

struct IsotropicMog {
  Matrix means;       // M x K
  Vector variances;   // K
  Vector weights;     // K, on the simplex

  Index num_components() const { return weights.size(); }
  Index dims() const { return means.rows(); }
};

struct MogConfig {
  int iterations = 2000;  // per start
  double tol = 1e-9;  // stop once the log-likelihood gain drops below this
  double variance_floor = 1e-6;
  bool shared_variance = true;
  // Independent starts; the one with the best training log-likelihood is kept.
  int restarts = 4;
};

struct MogResult {
  IsotropicMog model;
  std::vector<double> trace;   // training avg log-likelihood of the kept run per E step, plus final
  int reseeds = 0;             // collapsed components re-seeded
  int iterations = 0;
};

MogResult em_isotropic_mog(const DataBatch& d, Index k, const MogConfig& cfg, Rng& rng);
double mog_avg_ll(const DataBatch& d, const IsotropicMog& m);
// Mixing weights sorted in decreasing order.
Vector mog_order_mass(const IsotropicMog& m);

// ---- Amari error -----------------------------------------------------------

// With P = A B^-1: (1/2N) sum_ij [|P_ij| / max_k |P_ik| + |P_ij| / max_k |P_kj|] - 1.
double amari_error(const Matrix& a, const Matrix& b);

// ---- recovery of independent directions ----------------------------------

struct RecoveryResult {
  bool recovered = false;     // every true row matched by a distinct direction
  std::vector<double> angles_deg;  // best angle per true row, sign-aligned
};

// Compares the directions of the columns of `directions` (M x N) with the
// rows of `unmixing_true` (M x M). A true row counts as recovered when some
// distinct column lies within `threshold_deg` of it up to sign.
RecoveryResult classify_recovery(const Matrix& directions, const Matrix& unmixing_true,
                                 double threshold_deg = 15.0);

}  // namespace grbm
