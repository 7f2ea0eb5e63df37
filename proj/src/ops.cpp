#include "cono/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>
#include <numbers>

#include "cono/errors.hpp"

namespace cono {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// Piecewise quintic Hermite fit of gelu on [-kRange, kRange], matching value,
// first and second derivative at every node (max error ~1e-15). Forward and
// backward both use the same polynomial, so gradients are exact for it.
constexpr double kRange = 8.0;
constexpr int kPerUnit = 64;
constexpr int kIntervals = static_cast<int>(2 * kRange) * kPerUnit;

struct GeluTable {
  std::vector<std::array<double, 6>> c;

  GeluTable() : c(kIntervals) {
    const double h = 1.0 / kPerUnit;
    auto node = [&](int i, double& f, double& d1, double& d2) {
      const double x = -kRange + i * h;
      const double cdf = 0.5 * std::erfc(-x * kInvSqrt2);
      const double pdf = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2 * std::exp(-0.5 * x * x);
      f = x * cdf;
      d1 = h * (cdf + x * pdf);
      d2 = h * h * pdf * (2.0 - x * x);
    };
    for (int i = 0; i < kIntervals; ++i) {
      double f0, a0, b0, f1, a1, b1;
      node(i, f0, a0, b0);
      node(i + 1, f1, a1, b1);
      c[i] = {f0,
              a0,
              0.5 * b0,
              -10 * f0 - 6 * a0 - 1.5 * b0 + 10 * f1 - 4 * a1 + 0.5 * b1,
              15 * f0 + 8 * a0 + 1.5 * b0 - 15 * f1 + 7 * a1 - b1,
              -6 * f0 - 3 * a0 - 0.5 * b0 + 6 * f1 - 3 * a1 + 0.5 * b1};
    }
  }
};

const GeluTable& gelu_table() {
  static const GeluTable table;
  return table;
}

inline void fast_gelu(const GeluTable& tab, double x, double& value, double& deriv) {
  if (!(std::abs(x) < kRange)) {
    value = gelu(x);
    deriv = gelu_derivative(x);
    return;
  }
  const double u = (x + kRange) * kPerUnit;
  const int i = std::min(static_cast<int>(u), kIntervals - 1);
  const double t = u - i;
  const auto& c = tab.c[static_cast<std::size_t>(i)];
  value = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
  deriv = kPerUnit * (c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5]))));
}

}  // namespace

double gelu(double x) noexcept { return 0.5 * x * std::erfc(-x * kInvSqrt2); }

double gelu_derivative(double x) noexcept {
  const double cdf = 0.5 * std::erfc(-x * kInvSqrt2);
  const double pdf = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

ComplexTensor cgelu(const ComplexTensor& z) { return cgelu_with_derivative(z).first; }

std::pair<ComplexTensor, ComplexTensor> cgelu_with_derivative(const ComplexTensor& z) {
  const GeluTable& tab = gelu_table();
  ComplexTensor value(z.shape()), deriv(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double vr, vi, dr, di;
    fast_gelu(tab, z[i].real(), vr, dr);
    fast_gelu(tab, z[i].imag(), vi, di);
    value[i] = cplx(vr, vi);
    deriv[i] = cplx(dr, di);
  }
  return {std::move(value), std::move(deriv)};
}

}  // namespace cono

namespace cono::ad {

namespace {

using Grads = std::vector<ComplexTensor>;

}  // namespace

Var add(Var a, Var b) {
  return a.tape().record("add", {a, b}, cono::add(a.value(), b.value()),
                         [](const ComplexTensor& g, std::span<const bool>) { return Grads{g, g}; });
}

Var sub(Var a, Var b) {
  return a.tape().record("sub", {a, b}, cono::sub(a.value(), b.value()),
                         [](const ComplexTensor& g, std::span<const bool>) {
                           return Grads{g, cono::scale(g, -1.0)};
                         });
}

Var mul(Var a, Var b) {
  // Tape values live as long as the tape, so adjoints may point at them.
  const ComplexTensor* av = &a.value();
  const ComplexTensor* bv = &b.value();
  return a.tape().record("mul", {a, b}, cono::mul(*av, *bv),
                         [av, bv](const ComplexTensor& g, std::span<const bool> need) {
                           Grads out(2);
                           if (need[0]) out[0] = cono::mul(cono::conj(*bv), g);
                           if (need[1]) out[1] = cono::mul(cono::conj(*av), g);
                           return out;
                         });
}

Var scale(Var a, cplx s) {
  return a.tape().record("scale", {a}, cono::scale(a.value(), s),
                         [s](const ComplexTensor& g, std::span<const bool>) {
                           return Grads{cono::scale(g, std::conj(s))};
                         });
}

Var conj(Var a) {
  return a.tape().record("conj", {a}, cono::conj(a.value()),
                         [](const ComplexTensor& g, std::span<const bool>) { return Grads{cono::conj(g)}; });
}

Var sum(Var a) {
  cplx s{};
  for (const auto& z : a.value().data()) s += z;
  const Shape in_shape = a.shape();
  return a.tape().record("sum", {a}, ComplexTensor({1}, {s}),
                         [in_shape](const ComplexTensor& g, std::span<const bool>) {
                           return Grads{ComplexTensor::full(in_shape, g[0])};
                         });
}

Var real(Var a) {
  return a.tape().record("real", {a}, cono::real_part(a.value()),
                         [](const ComplexTensor& g, std::span<const bool>) { return Grads{real_part(g)}; });
}

Var probe(Var a, const ComplexTensor& c) {
  if (c.shape() != a.shape()) throw ShapeError("probe: weight shape " + shape_str(c.shape()) +
                                               " does not match " + shape_str(a.shape()));
  const double v = cono::inner(c, a.value()).real();
  return a.tape().record("probe", {a}, ComplexTensor({1}, {cplx(v, 0.0)}),
                         [c](const ComplexTensor& g, std::span<const bool>) {
                           return Grads{cono::scale(c, g[0].real())};
                         });
}

Var matmul_channels(Var w, Var x) {
  const ComplexTensor* wv = &w.value();
  const ComplexTensor* xv = &x.value();
  return w.tape().record("matmul_channels", {w, x}, cono::matmul_channels(*wv, *xv),
                         [wv, xv](const ComplexTensor& g, std::span<const bool> need) {
                           Grads out(2);
                           if (need[0]) out[0] = matmul_channels_weight_grad(g, *xv);
                           if (need[1]) out[1] = matmul_channels_adjoint(*wv, g);
                           return out;
                         });
}

Var add_channel_bias(Var x, Var b) {
  const ComplexTensor& xv = x.value();
  const ComplexTensor& bv = b.value();
  if (xv.rank() < 1 || bv.size() != xv.extent(0))
    throw ShapeError("add_channel_bias: bias " + shape_str(bv.shape()) + " vs field " + shape_str(xv.shape()));
  const std::size_t channels = xv.extent(0);
  const std::size_t points = xv.size() / channels;
  ComplexTensor y = xv;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < points; ++p) y[c * points + p] += bv[c];
  const Shape b_shape = bv.shape();
  return x.tape().record("add_channel_bias", {x, b}, std::move(y),
                         [channels, points, b_shape](const ComplexTensor& g, std::span<const bool> need) {
                           Grads out(2);
                           if (need[0]) out[0] = g;
                           if (need[1]) {
                             out[1] = ComplexTensor(b_shape);
                             for (std::size_t c = 0; c < channels; ++c) {
                               cplx s{};
                               for (std::size_t p = 0; p < points; ++p) s += g[c * points + p];
                               out[1][c] = s;
                             }
                           }
                           return out;
                         });
}

Var concat_channels(Var a, Var b) {
  const ComplexTensor& av = a.value();
  const ComplexTensor& bv = b.value();
  if (av.rank() != bv.rank() ||
      !std::equal(av.shape().begin() + 1, av.shape().end(), bv.shape().begin() + 1))
    throw ShapeError("concat_channels: spatial mismatch " + shape_str(av.shape()) + " vs " +
                     shape_str(bv.shape()));
  Shape shape = av.shape();
  shape[0] += bv.extent(0);
  ComplexTensor y(shape);
  std::copy(av.data().begin(), av.data().end(), y.data().begin());
  std::copy(bv.data().begin(), bv.data().end(), y.data().begin() + static_cast<std::ptrdiff_t>(av.size()));
  const Shape as = av.shape(), bs = bv.shape();
  const std::size_t na = av.size();
  return a.tape().record("concat_channels", {a, b}, std::move(y),
                         [as, bs, na](const ComplexTensor& g, std::span<const bool> need) {
                           Grads out(2);
                           if (need[0])
                             out[0] = ComplexTensor(as, {g.data().begin(), g.data().begin() + static_cast<std::ptrdiff_t>(na)});
                           if (need[1])
                             out[1] = ComplexTensor(bs, {g.data().begin() + static_cast<std::ptrdiff_t>(na), g.data().end()});
                           return out;
                         });
}

Var cgelu(Var z) {
  auto [value, deriv] = cgelu_with_derivative(z.value());
  auto d = std::make_shared<const ComplexTensor>(std::move(deriv));
  return z.tape().record("cgelu", {z}, std::move(value), [d](const ComplexTensor& g, std::span<const bool>) {
    const ComplexTensor& v = *d;
    ComplexTensor dz(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) dz[i] = cplx(g[i].real() * v[i].real(), g[i].imag() * v[i].imag());
    return Grads{std::move(dz)};
  });
}

Var squared_error_ratio(Var pred, const ComplexTensor& target) {
  const ComplexTensor& pv = pred.value();
  if (pv.shape() != target.shape())
    throw ShapeError("squared_error_ratio: prediction " + shape_str(pv.shape()) + " vs target " +
                     shape_str(target.shape()));
  double den = 0.0;
  for (const auto& z : target.data()) den += std::norm(z);
  if (!(den > 0.0)) throw std::invalid_argument("squared_error_ratio: target has zero norm");
  ComplexTensor diff = cono::sub(pv, target);
  double num = 0.0;
  for (const auto& z : diff.data()) num += std::norm(z);
  return pred.tape().record("squared_error_ratio", {pred}, ComplexTensor({1}, {cplx(num / den, 0.0)}),
                            [diff, den](const ComplexTensor& g, std::span<const bool>) {
                              return Grads{cono::scale(diff, 2.0 * g[0].real() / den)};
                            });
}

}  // namespace cono::ad
