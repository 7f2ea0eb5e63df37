#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cono/ctensor.hpp"

// Discrete fractional Fourier transform built from the eigenvectors of the
// tridiagonal-plus-corners matrix that commutes with the DFT.
//
// F^alpha = V diag(exp(-i pi k alpha / 2)) V^T, with V real orthonormal and k
// the Hermite index of each column. alpha = 1 is the centred unitary DFT,
// alpha = 2 the parity flip, and F^a F^b = F^(a+b) holds exactly.
namespace cono::frft {

class Plan {
 public:
  /// Eigendecomposition for grid size n >= 4. Deterministic for a given n.
  explicit Plan(std::size_t n);
  Plan(std::size_t n, std::vector<double> eigvecs, std::vector<int> hermite_index);

  std::size_t n() const noexcept { return n_; }
  /// Row-major n x n, columns are eigenvectors in centred coordinates.
  std::span<const double> eigvecs() const noexcept { return eigvecs_; }
  double eigvec(std::size_t row, std::size_t col) const noexcept { return eigvecs_[row * n_ + col]; }
  std::span<const int> hermite_index() const noexcept { return hermite_; }

  /// exp(-i pi k alpha / 2) per column.
  std::vector<cplx> eigenvalues(double alpha) const;
  /// d/dalpha of eigenvalues(alpha).
  std::vector<cplx> eigenvalue_derivatives(double alpha) const;

  /// Rows [row_begin, row_begin + rows) of F^alpha as a [rows, n] tensor.
  ComplexTensor matrix_rows(double alpha, std::size_t row_begin, std::size_t rows) const;
  /// Same rows of dF^alpha/dalpha.
  ComplexTensor matrix_rows_dalpha(double alpha, std::size_t row_begin, std::size_t rows) const;
  ComplexTensor matrix(double alpha) const { return matrix_rows(alpha, 0, n_); }

 private:
  ComplexTensor rows_with(std::span<const cplx> diag, std::size_t row_begin, std::size_t rows) const;

  std::size_t n_;
  std::vector<double> eigvecs_;
  std::vector<int> hermite_;
};

/// Shared, cached plan (persisted under $CONO_CACHE_DIR when set).
std::shared_ptr<const Plan> build_plan(std::size_t n);

/// F^alpha along `dim`.
ComplexTensor apply(const Plan& plan, const ComplexTensor& x, std::size_t dim, double alpha);

struct ApplyWithGrad {
  ComplexTensor y;
  ComplexTensor dy_dalpha;
};
/// F^alpha x and dF^alpha/dalpha x along `dim`.
ApplyWithGrad apply_grad_alpha(const Plan& plan, const ComplexTensor& x, std::size_t dim, double alpha);

/// Applies F^alpha_d along every spatial dim d of x[C, spatial...] in order;
/// `inverse` uses -alpha_d (and reverses the order).
ComplexTensor apply_nd(std::span<const Plan* const> plans, const ComplexTensor& x,
                       std::span<const double> alphas, bool inverse);

/// alpha reduced into [0, 4), the period of F^alpha.
double reduce_order(double alpha) noexcept;

}  // namespace cono::frft
