#include <numbers>

#include "doctest.h"
#include "grbm/baselines.hpp"
#include "test_util.hpp"

using namespace grbm;
using grbm::test::random_batch;

namespace {

Matrix rotation(double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

}  // namespace

TEST_CASE("Amari error") {
  Rng rng(70);
  Matrix a(3, 3);
  for (Index i = 0; i < 9; ++i) a.data()[i] = rng.normal();
  CHECK(amari_error(a, a) == doctest::Approx(0.0).epsilon(1e-12));

  // Invariant to row permutation and scaling of the estimate.
  Matrix perm = Matrix::Zero(3, 3);
  perm(0, 2) = -2.0;
  perm(1, 0) = 0.5;
  perm(2, 1) = 3.0;
  CHECK(std::abs(amari_error(perm * a, a)) < 1e-12);

  // Hand-computed: P = [[1, .5], [0, 1]] -> (2.5 + 2.5) / 4 - 1.
  Matrix p(2, 2);
  p << 1.0, 0.5, 0.0, 1.0;
  CHECK(amari_error(p, Matrix::Identity(2, 2)) == doctest::Approx(0.25));
  CHECK(amari_error(rotation(45.0), Matrix::Identity(2, 2)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(amari_error(p, Matrix::Zero(2, 2)), NumericError);
  CHECK_THROWS_AS(amari_error(p, Matrix::Identity(3, 3)), ContractError);
}

TEST_CASE("symmetric decorrelation gives orthonormal rows") {
  Rng rng(71);
  Matrix w(4, 4);
  for (Index i = 0; i < 16; ++i) w.data()[i] = rng.normal();
  const Matrix o = symmetric_decorrelation(w);
  CHECK((o * o.transpose() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("FastICA recovers Laplacian sources") {
  Rng rng(72);
  const BssData b = generate_laplacian_bss(20000, rng);
  Rng ica_rng(1);
  const IcaModel m = fast_ica(b.data, IcaConfig{}, ica_rng);
  CHECK(m.converged);
  CHECK((m.unmixing * m.unmixing.transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(amari_error(m.unmixing, b.truth.unmixing_true) < 0.05);
}

TEST_CASE("ICA log-likelihood against the logistic-source density") {
  Rng rng(73);
  const DataBatch d = random_batch(500, 2, rng);
  const Matrix w = rotation(30.0) * 1.3;
  double total = 0.0;
  for (Index l = 0; l < d.rows(); ++l) {
    const Vector y = w * d.row(l).transpose();
    for (Index j = 0; j < 2; ++j) total += -std::log(2.0 * std::cosh(y[j]) * std::cosh(y[j]));
  }
  const double expected = total / 500.0 + std::log(std::abs(w.determinant()));
  CHECK(ica_avg_ll(d, w) == doctest::Approx(expected).epsilon(1e-12));

  // Large arguments stay finite.
  DataBatch far(1, 2);
  far << 800.0, -900.0;
  CHECK(std::isfinite(ica_avg_ll(far, Matrix::Identity(2, 2))));
}

TEST_CASE("true-distribution log-likelihood is the Laplacian change of variables") {
  Rng rng(74);
  const BssData b = generate_laplacian_bss(1000, rng);
  const Matrix u = b.truth.unmixing_true;
  double total = 0.0;
  for (Index l = 0; l < b.data.rows(); ++l) {
    const Vector s = u * b.data.row(l).transpose();
    for (Index j = 0; j < 2; ++j) total += std::log(std::exp(-std::sqrt(2.0) * std::abs(s[j])) / std::sqrt(2.0));
  }
  const double expected = total / 1000.0 + std::log(std::abs(u.determinant()));
  CHECK(true_bss_avg_ll(b.data, b.truth) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("isotropic Gaussian") {
  Rng rng(75);
  const DataBatch d = random_batch(200000, 2, rng);
  // Standard normal data: -(M/2)(ln 2 pi + 1).
  CHECK(gaussian_avg_ll(d) == doctest::Approx(-(std::log(2.0 * std::numbers::pi) + 1.0)).epsilon(2e-3));
  const IsotropicGaussian g = fit_isotropic_gaussian(d);
  CHECK(g.variance == doctest::Approx(1.0).epsilon(0.01));
  DataBatch point(1, 2);
  point << 1.0, 2.0;
  IsotropicGaussian unit{Vector::Zero(2), 1.0};
  CHECK(gaussian_avg_ll(point, unit) == doctest::Approx(-std::log(2.0 * std::numbers::pi) - 2.5));
  CHECK_THROWS_AS(fit_isotropic_gaussian(DataBatch::Ones(10, 2)), DataError);
}

TEST_CASE("one-component MoG is the isotropic Gaussian") {
  Rng rng(76);
  DataBatch d = random_batch(3000, 3, rng);
  d.col(0) *= 2.0;
  MogConfig cfg;
  const MogResult r = em_isotropic_mog(d, 1, cfg, rng);
  CHECK(mog_avg_ll(d, r.model) == doctest::Approx(gaussian_avg_ll(d)).epsilon(1e-10));
  CHECK(r.model.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("EM never decreases the training likelihood") {
  Rng rng(77);
  // Three separated clusters.
  DataBatch d = random_batch(3000, 2, rng) * 0.5;
  for (Index i = 0; i < 3000; ++i) d(i, 0) += 4.0 * static_cast<double>(i % 3);
  for (bool shared : {true, false}) {
    MogConfig cfg;
    cfg.shared_variance = shared;
    cfg.restarts = 1;
    const MogResult r = em_isotropic_mog(d, 3, cfg, rng);
    REQUIRE(r.reseeds == 0);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-12);
    CHECK(r.model.weights.sum() == doctest::Approx(1.0));
    const Vector mass = mog_order_mass(r.model);
    CHECK(mass[0] >= mass[1]);
    CHECK(mass[1] >= mass[2]);
    CHECK(mass.minCoeff() > 0.3);
  }
}

TEST_CASE("more restarts never give a worse training fit") {
  Rng data_rng(78);
  const BssData b = generate_laplacian_bss(5000, data_rng);
  MogConfig one;
  one.restarts = 1;
  MogConfig four;
  four.restarts = 4;
  Rng r1(5), r4(5);
  const double ll1 = mog_avg_ll(b.data, em_isotropic_mog(b.data, 3, one, r1).model);
  const double ll4 = mog_avg_ll(b.data, em_isotropic_mog(b.data, 3, four, r4).model);
  CHECK(ll4 >= ll1 - 1e-12);
}

TEST_CASE("MoG settings are validated") {
  Rng rng(79);
  const DataBatch d = random_batch(10, 2, rng);
  CHECK_THROWS_AS(em_isotropic_mog(d, 0, MogConfig{}, rng), ContractError);
  CHECK_THROWS_AS(em_isotropic_mog(d, 11, MogConfig{}, rng), DataError);
  MogConfig bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(em_isotropic_mog(d, 2, bad, rng), ContractError);
}

TEST_CASE("recovery classification") {
  const Matrix u = rotation(25.0);
  // Columns close to the true rows, one with flipped sign.
  Matrix dirs(2, 2);
  dirs.col(0) = -(rotation(10.0) * u.row(1).transpose());
  dirs.col(1) = rotation(-5.0) * u.row(0).transpose() * 3.0;
  RecoveryResult r = classify_recovery(dirs, u);
  CHECK(r.recovered);
  CHECK(r.angles_deg[0] == doctest::Approx(5.0));
  CHECK(r.angles_deg[1] == doctest::Approx(10.0));

  dirs.col(0) = rotation(20.0) * u.row(1).transpose();
  CHECK_FALSE(classify_recovery(dirs, u).recovered);

  // Both columns near the same row.
  dirs.col(0) = u.row(0).transpose();
  dirs.col(1) = -u.row(0).transpose();
  CHECK_FALSE(classify_recovery(dirs, u).recovered);

  // Extra hidden units may cover the rows in any order.
  Matrix wide(2, 4);
  wide.col(0) = Vector::Zero(2);
  wide.col(1) = u.row(1).transpose();
  wide.col(2) = rotation(90.0 + 45.0) * u.row(0).transpose();
  wide.col(3) = u.row(0).transpose();
  CHECK(classify_recovery(wide, u).recovered);
}
