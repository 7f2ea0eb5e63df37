#include "cono/ctensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "cono/errors.hpp"
#include "cono/fft.hpp"
#include "detail/eigen_maps.hpp"

namespace cono {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

ComplexTensor::ComplexTensor(Shape shape) : shape_(std::move(shape)), data_(numel(shape_)) {
  for (auto e : shape_)
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
}

ComplexTensor::ComplexTensor(Shape shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != numel(shape_))
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
}

ComplexTensor ComplexTensor::full(Shape shape, cplx value) {
  ComplexTensor t(std::move(shape));
  t.fill(value);
  return t;
}

ComplexTensor ComplexTensor::from_real(Shape shape, std::span<const double> values) {
  ComplexTensor t(std::move(shape));
  if (values.size() != t.size()) throw ShapeError("from_real: value count does not match shape");
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = cplx(values[i], 0.0);
  return t;
}

std::size_t ComplexTensor::extent(std::size_t dim) const {
  if (dim >= shape_.size())
    throw ShapeError("dimension " + std::to_string(dim) + " out of range for " + shape_str(shape_));
  return shape_[dim];
}

ComplexTensor ComplexTensor::reshaped(Shape shape) const {
  return ComplexTensor(std::move(shape), data_);
}

bool ComplexTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

bool ComplexTensor::is_real() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](cplx z) { return z.imag() == 0.0; });
}

double ComplexTensor::norm() const noexcept {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

double ComplexTensor::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

double ComplexTensor::max_abs_imag() const noexcept {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z.imag()));
  return m;
}

void ComplexTensor::fill(cplx value) noexcept { std::fill(data_.begin(), data_.end(), value); }

void ComplexTensor::axpy(cplx s, const ComplexTensor& other) {
  if (other.shape_ != shape_)
    throw ShapeError("axpy: shape mismatch " + shape_str(shape_) + " vs " + shape_str(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
}

bool ComplexTensor::identical(const ComplexTensor& other) const noexcept {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(cplx)) == 0;
}

namespace {

void require_same_shape(const ComplexTensor& a, const ComplexTensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace

ComplexTensor elementwise(ElementwiseOp op, const ComplexTensor& a, const ComplexTensor& b) {
  if (op == ElementwiseOp::conj) return conj(a);
  require_same_shape(a, b, "elementwise");
  ComplexTensor out(a.shape());
  const std::size_t n = a.size();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
      break;
    case ElementwiseOp::conj:
      break;
  }
  return out;
}

ComplexTensor elementwise(ElementwiseOp op, const ComplexTensor& a, cplx s) {
  ComplexTensor out(a.shape());
  const std::size_t n = a.size();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + s;
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - s;
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
      break;
    case ElementwiseOp::conj:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::conj(a[i]);
      break;
  }
  return out;
}

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b) {
  return elementwise(ElementwiseOp::add, a, b);
}
ComplexTensor sub(const ComplexTensor& a, const ComplexTensor& b) {
  return elementwise(ElementwiseOp::sub, a, b);
}
ComplexTensor mul(const ComplexTensor& a, const ComplexTensor& b) {
  return elementwise(ElementwiseOp::mul, a, b);
}
ComplexTensor conj(const ComplexTensor& a) { return elementwise(ElementwiseOp::conj, a, cplx{}); }
ComplexTensor scale(const ComplexTensor& a, cplx s) {
  return elementwise(ElementwiseOp::scale, a, s);
}

ComplexTensor real_part(const ComplexTensor& a) {
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = cplx(a[i].real(), 0.0);
  return out;
}

cplx inner(const ComplexTensor& a, const ComplexTensor& b) {
  require_same_shape(a, b, "inner");
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

namespace {

std::size_t points_of(const ComplexTensor& x) { return x.rank() == 0 ? 0 : x.size() / x.extent(0); }

}  // namespace

ComplexTensor matmul_channels(const ComplexTensor& w, const ComplexTensor& x) {
  if (w.rank() != 2 || x.rank() < 1)
    throw ShapeError("matmul_channels: expected w[Co,Ci] and x[Ci,...], got " + shape_str(w.shape()) +
                     " and " + shape_str(x.shape()));
  if (w.extent(1) != x.extent(0))
    throw ShapeError("matmul_channels: channel mismatch, w has " + std::to_string(w.extent(1)) +
                     " inputs but x has " + std::to_string(x.extent(0)) + " channels");
  Shape out_shape = x.shape();
  out_shape[0] = w.extent(0);
  ComplexTensor y(out_shape);
  const auto p = static_cast<Eigen::Index>(points_of(x));
  detail::MatMap(y.raw(), w.extent(0), p).noalias() =
      detail::CMatMap(w.raw(), w.extent(0), w.extent(1)) * detail::CMatMap(x.raw(), x.extent(0), p);
  return y;
}

ComplexTensor matmul_channels_adjoint(const ComplexTensor& w, const ComplexTensor& g) {
  if (w.rank() != 2 || g.rank() < 1 || w.extent(0) != g.extent(0))
    throw ShapeError("matmul_channels_adjoint: shape mismatch " + shape_str(w.shape()) + " vs " +
                     shape_str(g.shape()));
  Shape out_shape = g.shape();
  out_shape[0] = w.extent(1);
  ComplexTensor y(out_shape);
  const auto p = static_cast<Eigen::Index>(points_of(g));
  detail::MatMap(y.raw(), w.extent(1), p).noalias() =
      detail::CMatMap(w.raw(), w.extent(0), w.extent(1)).adjoint() *
      detail::CMatMap(g.raw(), g.extent(0), p);
  return y;
}

ComplexTensor matmul_channels_weight_grad(const ComplexTensor& g, const ComplexTensor& x) {
  if (g.size() / g.extent(0) != x.size() / x.extent(0))
    throw ShapeError("matmul_channels_weight_grad: spatial mismatch " + shape_str(g.shape()) +
                     " vs " + shape_str(x.shape()));
  ComplexTensor dw({g.extent(0), x.extent(0)});
  const auto p = static_cast<Eigen::Index>(points_of(x));
  detail::MatMap(dw.raw(), g.extent(0), x.extent(0)).noalias() =
      detail::CMatMap(g.raw(), g.extent(0), p) * detail::CMatMap(x.raw(), x.extent(0), p).adjoint();
  return dw;
}

ComplexTensor apply_along(const ComplexTensor& a, const ComplexTensor& x, std::size_t dim) {
  const std::size_t n = x.extent(dim);
  if (a.rank() != 2 || a.extent(1) != n)
    throw ShapeError("apply_along: matrix " + shape_str(a.shape()) + " cannot act on extent " +
                     std::to_string(n) + " of " + shape_str(x.shape()));
  const std::size_t m = a.extent(0);
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < dim; ++d) outer *= x.extent(d);
  for (std::size_t d = dim + 1; d < x.rank(); ++d) inner *= x.extent(d);
  Shape out_shape = x.shape();
  out_shape[dim] = m;
  ComplexTensor y(out_shape);
  const detail::CMatMap am(a.raw(), m, n);
  if (inner == 1) {
    detail::MatMap(y.raw(), outer, m).noalias() = detail::CMatMap(x.raw(), outer, n) * am.transpose();
  } else {
    for (std::size_t o = 0; o < outer; ++o)
      detail::MatMap(y.raw() + o * m * inner, m, inner).noalias() =
          am * detail::CMatMap(x.raw() + o * n * inner, n, inner);
  }
  return y;
}

ComplexTensor scale_along(std::span<const cplx> d, const ComplexTensor& x, std::size_t dim) {
  const std::size_t n = x.extent(dim);
  if (d.size() != n) throw ShapeError("scale_along: factor length does not match extent");
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < dim; ++k) outer *= x.extent(k);
  for (std::size_t k = dim + 1; k < x.rank(); ++k) inner *= x.extent(k);
  ComplexTensor y = x;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j) {
      cplx* line = y.raw() + (o * n + j) * inner;
      for (std::size_t i = 0; i < inner; ++i) line[i] *= d[j];
    }
  return y;
}

ComplexTensor roll(const ComplexTensor& x, std::size_t dim, long offset) {
  const std::size_t n = x.extent(dim);
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < dim; ++d) outer *= x.extent(d);
  for (std::size_t d = dim + 1; d < x.rank(); ++d) inner *= x.extent(d);
  const long ln = static_cast<long>(n);
  const auto shift = static_cast<std::size_t>(((offset % ln) + ln) % ln);
  ComplexTensor y(x.shape());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dst = (j + shift) % n;
      std::copy_n(x.raw() + (o * n + j) * inner, inner, y.raw() + (o * n + dst) * inner);
    }
  return y;
}

ComplexTensor centered_dft(const ComplexTensor& x, std::size_t dim, bool inverse) {
  const std::size_t n = x.extent(dim);
  const long c = static_cast<long>(n / 2);
  // Move the centre sample to index 0, transform, move frequency 0 back to the centre.
  ComplexTensor y = roll(x, dim, -c);
  fft::transform_dim(y, dim, inverse);
  y = roll(y, dim, c);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& z : y.data()) z *= s;
  return y;
}

std::size_t GridSpec::points() const noexcept {
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{1}, std::multiplies<>());
}

void GridSpec::validate() const {
  if (sizes.empty() || sizes.size() > 2)
    throw ShapeError("grid must have 1 or 2 spatial dimensions, got " + std::to_string(sizes.size()));
  for (auto s : sizes)
    if (s < 4) throw ShapeError("grid extents must be >= 4, got " + std::to_string(s));
}

std::vector<std::size_t> spatial_extents(const ComplexTensor& field) {
  if (field.rank() < 2) throw ShapeError("field must be [C, spatial...], got " + shape_str(field.shape()));
  return {field.shape().begin() + 1, field.shape().end()};
}

}  // namespace cono
