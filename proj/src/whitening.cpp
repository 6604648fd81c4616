#include "grbm/whitening.hpp"

#include <string>

namespace grbm {

std::string_view whitening_kind_name(WhiteningKind k) {
  return k == WhiteningKind::pca ? "pca" : "zca";
}

WhiteningKind parse_whitening_kind(std::string_view name) {
  if (name == "pca" || name == "PCA") return WhiteningKind::pca;
  if (name == "zca" || name == "ZCA") return WhiteningKind::zca;
  throw ContractError("unknown whitening kind: " + std::string(name));
}

Matrix sample_covariance(const DataBatch& d) {
  if (d.rows() < 1) throw ContractError("covariance of an empty batch");
  const Eigen::RowVectorXd mean = d.colwise().mean();
  const RowMatrix centered = d.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(d.rows());
}

WhiteningTransform fit_whitening(const DataBatch& d, WhiteningKind kind) {
  if (d.rows() < 2 || d.cols() < 1) throw DataError("whitening needs at least two samples");
  if (!d.allFinite()) throw DataError("whitening input contains non-finite values");
  const Matrix cov = sample_covariance(d);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw DataError("eigendecomposition of the covariance failed");

  const Index m = d.cols();
  // Descending eigenvalue order with each eigenvector's largest entry positive.
  Vector values(m);
  Matrix vectors(m, m);
  for (Index k = 0; k < m; ++k) {
    const Index src = m - 1 - k;
    values[k] = eig.eigenvalues()[src];
    Vector v = eig.eigenvectors().col(src);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    vectors.col(k) = v;
  }
  if (values.minCoeff() < kEigenvalueFloor) {
    throw DataError("covariance is rank deficient (smallest eigenvalue " +
                    std::to_string(values.minCoeff()) + ")");
  }

  WhiteningTransform t;
  t.kind = kind;
  t.mean = d.colwise().mean().transpose();
  const Vector inv_sqrt = values.cwiseSqrt().cwiseInverse();
  const Vector sqrt_values = values.cwiseSqrt();
  if (kind == WhiteningKind::pca) {
    t.forward = inv_sqrt.asDiagonal() * vectors.transpose();
    t.inverse = vectors * sqrt_values.asDiagonal();
  } else {
    t.forward = vectors * inv_sqrt.asDiagonal() * vectors.transpose();
    t.inverse = vectors * sqrt_values.asDiagonal() * vectors.transpose();
  }
  return t;
}

WhiteningTransform pca_whitening(const DataBatch& d) { return fit_whitening(d, WhiteningKind::pca); }
WhiteningTransform zca_whitening(const DataBatch& d) { return fit_whitening(d, WhiteningKind::zca); }

DataBatch apply_whitening(const WhiteningTransform& t, const DataBatch& d) {
  if (d.cols() != t.dims()) throw ContractError("whitening dimension mismatch");
  return (d.rowwise() - t.mean.transpose()) * t.forward.transpose();
}

DataBatch invert_whitening(const WhiteningTransform& t, const DataBatch& d) {
  if (d.cols() != t.dims()) throw ContractError("whitening dimension mismatch");
  DataBatch out = d * t.inverse.transpose();
  out.rowwise() += t.mean.transpose();
  return out;
}

}  // namespace grbm
