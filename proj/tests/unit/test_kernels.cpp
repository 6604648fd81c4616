#include <vector>

#include "doctest.h"
#include "grbm/kernels.hpp"
#include "grbm/rng.hpp"

using namespace grbm;
using namespace grbm::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  Rng rng(1);
  const KernelTable& k = scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(naive_dot(a, b)).epsilon(1e-12));
    double sd = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sd += (a[i] - b[i]) * (a[i] - b[i]);
      s += a[i];
    }
    CHECK(k.squared_distance(a.data(), b.data(), n) == doctest::Approx(sd).epsilon(1e-12));
    CHECK(k.sum(a.data(), n) == doctest::Approx(s).epsilon(1e-12));

    auto y = b;
    k.axpy(0.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == 0.5 * a[i] + b[i]);
    y = b;
    k.axpby(2.0, a.data(), -0.25, y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(2.0 * a[i] - 0.25 * b[i]));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const KernelTable* v = avx2_table();
  if (v == nullptr || !isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available on this machine; skipped");
    return;
  }
  const KernelTable& s = scalar_table();
  Rng rng(2);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    // Reassociated sums differ by a few ulps of the magnitude.
    const double scale = 1.0 + naive_dot(a, a) + naive_dot(b, b);
    CHECK(std::abs(v->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <= 1e-13 * scale);
    CHECK(std::abs(v->squared_distance(a.data(), b.data(), n) - s.squared_distance(a.data(), b.data(), n)) <=
          1e-13 * scale);
    CHECK(std::abs(v->sum(a.data(), n) - s.sum(a.data(), n)) <= 1e-13 * scale);

    // Element-wise kernels are exact up to FMA contraction.
    auto y1 = b, y2 = b;
    v->axpy(-1.5, a.data(), y1.data(), n);
    s.axpy(-1.5, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
    y1 = b;
    y2 = b;
    v->axpby(0.3, a.data(), 0.7, y1.data(), n);
    s.axpby(0.3, a.data(), 0.7, y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
  }
}

TEST_CASE("unaligned avx2 inputs") {
  if (!isa_supported(Isa::avx2)) return;
  Rng rng(3);
  const auto base_a = random_vec(40, rng);
  const auto base_b = random_vec(40, rng);
  for (std::size_t off = 0; off < 4; ++off) {
    const std::size_t n = 33;
    const double ref = scalar_table().dot(base_a.data() + off, base_b.data() + off, n);
    CHECK(avx2_table()->dot(base_a.data() + off, base_b.data() + off, n) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("dispatch can be switched and restored") {
  const Isa before = active_isa();
  {
    ScopedIsa guard(Isa::scalar);
    CHECK(active_isa() == Isa::scalar);
    CHECK(active().isa == Isa::scalar);
  }
  CHECK(active_isa() == before);
  CHECK(isa_name(Isa::scalar) == "scalar");
  CHECK(isa_name(Isa::avx2) == "avx2");
}
