#include "grbm/bss.hpp"

namespace grbm {

double sample_unit_laplacian(Rng& rng) {
  constexpr double kScale = 0.70710678118654752440;  // 1/sqrt(2)
  double u = 0.0;
  do {
    u = rng.uniform() - 0.5;
  } while (u == -0.5);
  const double mag = -kScale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -mag : mag;
}

DataBatch sample_laplacian_sources(Index n, Index dims, Rng& rng) {
  if (n < 1 || dims < 1) throw ContractError("need at least one sample and one source");
  DataBatch s(n, dims);
  for (Index l = 0; l < n; ++l) {
    for (Index i = 0; i < dims; ++i) s(l, i) = sample_unit_laplacian(rng);
  }
  return s;
}

Matrix random_mixing_matrix(Index dims, Rng& rng, double min_abs_det) {
  if (dims < 1) throw ContractError("mixing matrix needs at least one dimension");
  if (!(min_abs_det >= 0.0)) throw ContractError("determinant threshold must be non-negative");
  Matrix a(dims, dims);
  do {
    for (Index j = 0; j < dims; ++j) {
      for (Index i = 0; i < dims; ++i) a(i, j) = rng.uniform(-1.0, 1.0);
    }
  } while (!(std::abs(a.determinant()) > min_abs_det));
  return a;
}

BssData generate_laplacian_bss(Index n, Rng& rng, std::optional<Matrix> mixing,
                               std::optional<Index> fit_rows, Index dims) {
  if (n < 1) throw ContractError("need at least one sample");
  const DataBatch sources = sample_laplacian_sources(n, dims, rng);
  Matrix a = mixing ? *mixing : random_mixing_matrix(dims, rng);
  if (a.rows() != dims || a.cols() != dims) throw ContractError("mixing matrix shape mismatch");
  if (!(std::abs(a.determinant()) > 1e-6)) throw DataError("mixing matrix is singular");

  const DataBatch mixed = sources * a.transpose();
  const Index fit = fit_rows.value_or(n);
  if (fit < 2 || fit > n) throw ContractError("whitening fit rows out of range");

  BssData out;
  out.truth.mixing = std::move(a);
  out.truth.whitening = pca_whitening(mixed.topRows(fit));
  out.data = apply_whitening(out.truth.whitening, mixed);
  out.truth.unmixing_true = (out.truth.whitening.forward * out.truth.mixing).inverse();
  return out;
}

}  // namespace grbm
