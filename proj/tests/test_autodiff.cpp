#include <cmath>

#include "cono/autodiff.hpp"
#include "cono/ops.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cono;
using cono::test::random_tensor;

TEST_SUITE("autodiff") {

TEST_CASE("gelu scalar oracle") {
  // x * Phi(x) with Phi from the error function
  auto oracle = [](double x) { return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
  for (double x : {-10.0, -3.0, -0.5, 0.0, 0.7, 3.0}) CHECK(gelu(x) == doctest::Approx(oracle(x)).epsilon(1e-14));
  const auto z = cgelu(ComplexTensor({3}, {cplx(0, 0), cplx(3, 3), cplx(-10, 10)}));
  CHECK(z[0] == cplx(0, 0));
  CHECK(z[1].real() == doctest::Approx(2.995950177));
  CHECK(z[1].imag() == doctest::Approx(2.995950177));
  CHECK(std::abs(z[2].real()) < 1e-20);
  CHECK(z[2].imag() == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("backward requires a real scalar") {
  ad::Tape tape;
  ad::Parameter p("p", random_tensor({3}, 1));
  auto v = tape.param(p);
  CHECK_THROWS(tape.backward(v));
  CHECK_THROWS(tape.backward(ad::sum(v)));
  CHECK_NOTHROW(tape.backward(ad::probe(v, random_tensor({3}, 2))));
}

TEST_CASE("vars from another tape are rejected") {
  ad::Tape a, b;
  auto x = a.constant(random_tensor({2}, 3));
  auto y = b.constant(random_tensor({2}, 4));
  CHECK_THROWS(ad::add(x, y));
}

TEST_CASE("probe gradient is the probe weight") {
  ad::Parameter p("p", random_tensor({4}, 5));
  const auto c = random_tensor({4}, 6);
  ad::Tape tape;
  tape.backward(ad::probe(tape.param(p), c));
  CHECK(tape.parameter_grads().at(0).second.identical(c));
}

TEST_CASE("parameter used twice accumulates") {
  ad::Parameter p("p", random_tensor({3}, 7));
  const auto c = random_tensor({3}, 8);
  ad::Tape tape;
  auto v = tape.param(p);
  tape.backward(ad::probe(ad::add(v, v), c));
  CHECK(test::rel_err(tape.parameter_grads().at(0).second, scale(c, 2.0)) < 1e-15);
}

TEST_CASE("gradcheck of composed primitives") {
  ad::Parameter w("w", random_tensor({3, 2}, 9, 0.5));
  ad::Parameter x("x", random_tensor({2, 6}, 10));
  ad::Parameter b("b", random_tensor({3}, 11));
  ad::Parameter r("r", random_tensor({3, 6}, 12, 1.0, true), true);
  const auto c = random_tensor({3, 6}, 13);
  const auto target = random_tensor({6, 6}, 14);
  ad::LossFn fn = [&](ad::Tape& t) {
    auto y = ad::add_channel_bias(ad::matmul_channels(t.param(w), t.param(x)), t.param(b));
    y = ad::cgelu(ad::mul(y, ad::conj(y)));
    y = ad::sub(ad::scale(y, cplx(0.5, -0.25)), t.param(r));
    auto z = ad::concat_channels(y, ad::real(y));
    return ad::add(ad::probe(y, c), ad::squared_error_ratio(z, target));
  };
  std::vector<ad::Parameter*> ps{&w, &x, &b, &r};
  CHECK(ad::gradcheck(fn, ps, 1e-6) < 1e-6);
}

TEST_CASE("real-constrained and frozen parameters") {
  ad::Parameter p("p", random_tensor({3}, 15, 1.0, true), true);
  ad::Parameter q("q", random_tensor({3}, 16));
  q.frozen = true;
  ad::Tape tape;
  tape.backward(ad::probe(ad::mul(tape.param(p), tape.param(q)), random_tensor({3}, 17)));
  for (auto& [param, g] : tape.parameter_grads()) {
    if (param == &p) CHECK(g.max_abs_imag() == 0.0);
    if (param == &q) CHECK(g.max_abs() == 0.0);
  }
}

TEST_CASE("unreached node has zero gradient") {
  ad::Tape tape;
  ad::Parameter p("p", random_tensor({2}, 18));
  auto a = tape.param(p);
  auto unused = ad::scale(a, 2.0);
  tape.backward(ad::probe(a, random_tensor({2}, 19)));
  CHECK(tape.grad(unused).max_abs() == 0.0);
}

}

TEST_SUITE("autodiff") {

TEST_CASE("tensor gelu agrees with the scalar definition") {
  ComplexTensor z({4001});
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = -10.0 + 0.005 * static_cast<double>(i) + 1e-4;
    z[i] = cplx(x, 0.37 * x);
  }
  const auto [v, d] = cgelu_with_derivative(z);
  double worst_v = 0.0, worst_d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    worst_v = std::max({worst_v, std::abs(v[i].real() - gelu(z[i].real())), std::abs(v[i].imag() - gelu(z[i].imag()))});
    worst_d = std::max({worst_d, std::abs(d[i].real() - gelu_derivative(z[i].real())),
                        std::abs(d[i].imag() - gelu_derivative(z[i].imag()))});
  }
  CHECK(worst_v <= 1e-13);
  CHECK(worst_d <= 1e-11);
}
}
