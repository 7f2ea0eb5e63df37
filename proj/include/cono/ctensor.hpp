#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cono {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of complex doubles.
///
/// Real-valued fields are stored with all imaginary parts zero. Layout for
/// fields is channels-first: [C, X] or [C, X, Y].
class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(Shape shape);
  ComplexTensor(Shape shape, std::vector<cplx> data);

  static ComplexTensor full(Shape shape, cplx value);
  static ComplexTensor from_real(Shape shape, std::span<const double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t dim) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }
  cplx* raw() noexcept { return data_.data(); }
  const cplx* raw() const noexcept { return data_.data(); }

  cplx& operator[](std::size_t i) noexcept { return data_[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Same data, new shape with equal element count.
  ComplexTensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;
  bool is_real() const noexcept;
  double norm() const noexcept;
  double max_abs() const noexcept;
  double max_abs_imag() const noexcept;

  void fill(cplx value) noexcept;
  /// this += s * other
  void axpy(cplx s, const ComplexTensor& other);

  /// Bitwise equality of shape and every component.
  bool identical(const ComplexTensor& other) const noexcept;

 private:
  Shape shape_;
  std::vector<cplx> data_;
};

enum class ElementwiseOp { add, sub, mul, conj, scale };

/// a (op) b elementwise; `conj` ignores b.
ComplexTensor elementwise(ElementwiseOp op, const ComplexTensor& a, const ComplexTensor& b);
/// a (op) s with a scalar right-hand side.
ComplexTensor elementwise(ElementwiseOp op, const ComplexTensor& a, cplx s);

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor sub(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor mul(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor conj(const ComplexTensor& a);
ComplexTensor scale(const ComplexTensor& a, cplx s);
ComplexTensor real_part(const ComplexTensor& a);

/// Sum of conj(a) * b over all elements.
cplx inner(const ComplexTensor& a, const ComplexTensor& b);

/// y[o, p] = sum_i w[o, i] x[i, p] at every grid point p.
ComplexTensor matmul_channels(const ComplexTensor& w, const ComplexTensor& x);
/// y[i, p] = sum_o conj(w[o, i]) g[o, p]; the adjoint of matmul_channels in x.
ComplexTensor matmul_channels_adjoint(const ComplexTensor& w, const ComplexTensor& g);
/// dw[o, i] = sum_p g[o, p] conj(x[i, p]); the adjoint in w.
ComplexTensor matmul_channels_weight_grad(const ComplexTensor& g, const ComplexTensor& x);

/// Unitary DFT along `dim` with the index origin at the centre grid point
/// floor(N/2): y[k] = N^-1/2 sum_n x[n] exp(-2 pi i (k-c)(n-c) / N).
ComplexTensor centered_dft(const ComplexTensor& x, std::size_t dim, bool inverse);

/// Applies a matrix a[m, n] to every line along `dim` (extent n becomes m).
ComplexTensor apply_along(const ComplexTensor& a, const ComplexTensor& x, std::size_t dim);
/// Multiplies every line along `dim` elementwise by d (length = extent of dim).
ComplexTensor scale_along(std::span<const cplx> d, const ComplexTensor& x, std::size_t dim);

/// Circular shift by `offset` samples along `dim` (y[n] = x[n - offset]).
ComplexTensor roll(const ComplexTensor& x, std::size_t dim, long offset);

/// Uniform grid on the unit interval / square, spacing 1/size.
struct GridSpec {
  std::vector<std::size_t> sizes;

  std::size_t spatial_dims() const noexcept { return sizes.size(); }
  double spacing(std::size_t dim) const { return 1.0 / static_cast<double>(sizes.at(dim)); }
  std::size_t points() const noexcept;
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Spatial extents of a channels-first field [C, spatial...].
std::vector<std::size_t> spatial_extents(const ComplexTensor& field);

}  // namespace cono
