#include <cmath>
#include <numbers>

#include "cono/ctensor.hpp"
#include "cono/errors.hpp"
#include "cono/fft.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cono;
using cono::test::random_tensor;
using cono::test::rel_err;

TEST_SUITE("ctensor") {

TEST_CASE("zero extent is rejected") {
  CHECK_THROWS_AS(ComplexTensor(Shape{3, 0}), ShapeError);
  CHECK_THROWS_AS(ComplexTensor(Shape{2}, std::vector<cplx>(3)), ShapeError);
}

TEST_CASE("elementwise ops and shape mismatch") {
  const auto a = random_tensor({2, 5}, 1);
  const auto b = random_tensor({2, 5}, 2);
  const auto s = add(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(s[i] == a[i] + b[i]);
  const auto p = mul(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(p[i] - a[i] * b[i]) == 0.0);
  CHECK_THROWS_AS(add(a, random_tensor({5, 2}, 3)), ShapeError);
  CHECK(conj(conj(a)).identical(a));
}

TEST_CASE("inner product is conjugate-linear in the first slot") {
  const auto a = random_tensor({7}, 4);
  const auto b = random_tensor({7}, 5);
  const cplx s(0.3, -1.2);
  CHECK(std::abs(inner(scale(a, s), b) - std::conj(s) * inner(a, b)) < 1e-12);
}

TEST_CASE("matmul_channels and its adjoints") {
  const auto w = random_tensor({3, 4}, 6);
  const auto x = random_tensor({4, 5, 6}, 7);
  const auto g = random_tensor({3, 5, 6}, 8);
  const auto y = matmul_channels(w, x);
  REQUIRE(y.shape() == Shape{3, 5, 6});
  // naive loop
  double worst = 0;
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t p = 0; p < 30; ++p) {
      cplx s{};
      for (std::size_t i = 0; i < 4; ++i) s += w[o * 4 + i] * x[i * 30 + p];
      worst = std::max(worst, std::abs(s - y[o * 30 + p]));
    }
  CHECK(worst < 1e-13);
  // <g, W x> = <W^H g, x> = <g x^H, W>
  const cplx lhs = inner(g, y);
  CHECK(std::abs(lhs - inner(matmul_channels_adjoint(w, g), x)) < 1e-11);
  CHECK(std::abs(std::conj(lhs) - inner(w, matmul_channels_weight_grad(g, x))) < 1e-11);
}

TEST_CASE("fft matches the direct sum") {
  for (std::size_t n : {1u, 2u, 7u, 8u, 85u, 128u}) {
    auto x = random_tensor({n}, n);
    auto y = x;
    fft::transform(y.data(), false);
    auto z = x;
    fft::direct(z.data(), false);
    CHECK(rel_err(y, z) < 1e-12);
    fft::transform(y.data(), true);
    CHECK(rel_err(scale(y, 1.0 / static_cast<double>(n)), x) < 1e-13);
  }
}

TEST_CASE("fft along an interior dimension") {
  const auto x = random_tensor({3, 6, 5}, 11);
  auto y = x;
  fft::transform_dim(y, 1, false);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 5; ++k) {
      std::vector<cplx> line(6);
      for (std::size_t j = 0; j < 6; ++j) line[j] = x[(c * 6 + j) * 5 + k];
      fft::direct(line, false);
      for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(line[j] - y[(c * 6 + j) * 5 + k]) < 1e-12);
    }
}

TEST_CASE("centered dft uses the floor(N/2) origin") {
  for (std::size_t n : {5u, 8u}) {
    const auto x = random_tensor({n}, 20 + n);
    const auto y = centered_dft(x, 0, false);
    const double c = std::floor(n / 2.0);
    for (std::size_t k = 0; k < n; ++k) {
      cplx s{};
      for (std::size_t j = 0; j < n; ++j)
        s += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * (k - c) * (j - c) / static_cast<double>(n));
      CHECK(std::abs(s / std::sqrt(static_cast<double>(n)) - y[k]) < 1e-12);
    }
    CHECK(rel_err(centered_dft(y, 0, true), x) < 1e-13);
  }
}

TEST_CASE("roll and apply_along") {
  const auto x = random_tensor({2, 5}, 30);
  const auto r = roll(x, 1, 2);
  CHECK(r[0 * 5 + 2] == x[0]);
  CHECK(r[1 * 5 + 0] == x[1 * 5 + 3]);
  CHECK(roll(r, 1, -2).identical(x));
  const auto a = random_tensor({3, 5}, 31);
  const auto y = apply_along(a, x, 1);
  REQUIRE(y.shape() == Shape{2, 3});
  cplx s{};
  for (std::size_t j = 0; j < 5; ++j) s += a[2 * 5 + j] * x[5 + j];
  CHECK(std::abs(s - y[1 * 3 + 2]) < 1e-13);
}

TEST_CASE("grid spec") {
  GridSpec g{{64, 32}};
  CHECK(g.points() == 64 * 32);
  CHECK(g.spacing(0) == doctest::Approx(1.0 / 64));
  CHECK_THROWS(GridSpec{{2}}.validate());
  CHECK_THROWS(GridSpec{{8, 8, 8}}.validate());
}

}
