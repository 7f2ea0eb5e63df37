#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "cono/fft.hpp"
#include "cono/pdedata.hpp"
#include "helpers.hpp"

// Independent references shared by the unit tests and the acceptance run.
namespace cono::test {

using std::numbers::pi;


// Random field whose DFT is supported on |k| < n / 4 in every spatial dim.
inline ComplexTensor low_band(const Shape& shape, std::uint64_t seed, double amp = 1.0) {
  ComplexTensor x = random_tensor(shape, seed);
  for (std::size_t d = 1; d < shape.size(); ++d) {
    fft::transform_dim(x, d, false);
    const std::size_t n = shape[d];
    std::size_t outer = 1, inner = 1;
    for (std::size_t e = 0; e < d; ++e) outer *= shape[e];
    for (std::size_t e = d + 1; e < shape.size(); ++e) inner *= shape[e];
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t f = std::min(k, n - k);
        for (std::size_t i = 0; i < inner; ++i) {
          cplx& z = x[(o * n + k) * inner + i];
          z = f < n / 4 ? z / static_cast<double>(n) : 0.0;
        }
      }
    fft::transform_dim(x, d, true);
  }
  return scale(x, amp * std::sqrt(static_cast<double>(x.size())) / x.norm());
}

// Shift by half a sample along the last dim through the spectrum (Nyquist bin dropped).
inline ComplexTensor half_shift(const ComplexTensor& x) {
  ComplexTensor y = x;
  const std::size_t d = x.rank() - 1, n = x.extent(d);
  fft::transform_dim(y, d, false);
  const std::size_t outer = x.size() / n;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < n; ++k) {
      const long f = k < (n + 1) / 2 ? long(k) : long(k) - long(n);
      cplx& z = y[o * n + k];
      if (n % 2 == 0 && k == n / 2) z = 0;
      else z *= std::polar(1.0 / double(n), -std::numbers::pi * double(f) / double(n));
    }
  fft::transform_dim(y, d, true);
  return y;
}

inline double shift_defect(const std::function<ComplexTensor(const ComplexTensor&)>& act, const ComplexTensor& x) {
  const auto y = act(x);
  return sub(half_shift(y), act(half_shift(x))).norm() / y.norm();
}

inline ComplexTensor naive_conv(const ComplexTensor& w, const ComplexTensor& b, const ComplexTensor& x) {
  const std::size_t co = w.extent(0), ci = w.extent(1), k = w.extent(2);
  const long h = long(k / 2);
  if (x.rank() == 2) {
    const std::size_t n = x.extent(1);
    ComplexTensor y({co, n});
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t p = 0; p < n; ++p) {
        cplx s = b[o];
        for (std::size_t i = 0; i < ci; ++i)
          for (std::size_t t = 0; t < k; ++t) s += w[(o * ci + i) * k + t] * x[i * n + (p + n + t - h) % n];
        y[o * n + p] = s;
      }
    return y;
  }
  const std::size_t ny = x.extent(1), nx = x.extent(2);
  ComplexTensor y({co, ny, nx});
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t py = 0; py < ny; ++py)
      for (std::size_t px = 0; px < nx; ++px) {
        cplx s = b[o];
        for (std::size_t i = 0; i < ci; ++i)
          for (std::size_t ty = 0; ty < k; ++ty)
            for (std::size_t tx = 0; tx < k; ++tx)
              s += w[((o * ci + i) * k + ty) * k + tx] *
                   x[(i * ny + (py + ny + ty - h) % ny) * nx + (px + nx + tx - h) % nx];
        y[(o * ny + py) * nx + px] = s;
      }
  return y;
}

// Independent FNO-style layer: centred DFT per dim, central window, per-mode mix, inverse.
inline ComplexTensor fourier_layer_oracle(const ComplexTensor& x, const ComplexTensor& w, const std::vector<std::size_t>& modes) {
  ComplexTensor spec = x;
  for (std::size_t d = 1; d < x.rank(); ++d) spec = centered_dft(spec, d, false);
  const std::size_t ci = x.extent(0), co = w.extent(0);
  Shape out_shape = x.shape();
  out_shape[0] = co;
  ComplexTensor out(out_shape);
  const auto ext = spatial_extents(x);
  const std::size_t ny = ext[0], nx = ext.size() > 1 ? ext[1] : 1;
  const std::size_t my = modes[0], mx = modes.size() > 1 ? modes[1] : 1;
  const std::size_t sy = ny / 2 - my / 2, sx = ext.size() > 1 ? nx / 2 - mx / 2 : 0;
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t ky = 0; ky < my; ++ky)
      for (std::size_t kx = 0; kx < mx; ++kx) {
        cplx s{};
        for (std::size_t i = 0; i < ci; ++i)
          s += w[((o * ci + i) * my + ky) * mx + kx] * spec[(i * ny + sy + ky) * nx + sx + kx];
        out[(o * ny + sy + ky) * nx + sx + kx] = s;
      }
  for (std::size_t d = 1; d < x.rank(); ++d) out = centered_dft(out, d, true);
  return out;
}



inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// Exact viscous Burgers solution for u0 = sin(2 pi x) through the heat
// equation; Fourier coefficients of phi0 by trapezoid quadrature.
inline std::vector<double> cole_hopf(std::size_t n, double nu, double t) {
  const std::size_t m = 1024;
  const int kmax = 100;
  std::vector<std::complex<double>> coef(2 * kmax + 1);
  for (int k = -kmax; k <= kmax; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      const double x = static_cast<double>(q) / m;
      const double phi0 = std::exp(-(1.0 - std::cos(2 * pi * x)) / (4 * pi * nu));
      s += phi0 * std::exp(std::complex<double>(0.0, -2 * pi * k * x));
    }
    coef[k + kmax] = s / static_cast<double>(m) * std::exp(-nu * 4 * pi * pi * k * k * t);
  }
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / n;
    std::complex<double> phi = 0.0, dphi = 0.0;
    for (int k = -kmax; k <= kmax; ++k) {
      const auto e = coef[k + kmax] * std::exp(std::complex<double>(0.0, 2 * pi * k * x));
      phi += e;
      dphi += std::complex<double>(0.0, 2 * pi * k) * e;
    }
    u[i] = -2.0 * nu * dphi.real() / phi.real();
  }
  return u;
}

// Dense interior Darcy matrix assembled face by face.
inline Eigen::VectorXd dense_darcy(const ComplexTensor& a, double beta) {
  const std::size_t n = a.extent(1), m = n - 1;
  const double h2 = 1.0 / static_cast<double>(n * n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m * m, m * m);
  Eigen::VectorXd f = Eigen::VectorXd::Constant(m * m, beta);
  auto val = [&](std::size_t i, std::size_t j) { return a[(i % n) * n + (j % n)].real(); };
  auto idx = [&](std::size_t i, std::size_t j) { return (i - 1) * m + (j - 1); };
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 1; j < n; ++j)
      for (int d = 0; d < 4; ++d) {
        const std::size_t ni = i + di[d], nj = j + dj[d];
        const double a0 = val(i, j), a1 = val(ni, nj);
        const double face = 2.0 * a0 * a1 / (a0 + a1) / h2;
        A(idx(i, j), idx(i, j)) += face;
        if (ni >= 1 && ni < n && nj >= 1 && nj < n) A(idx(i, j), idx(ni, nj)) -= face;
      }
  return A.partialPivLu().solve(f);
}

inline GridDataset synthetic(std::size_t n, std::size_t size, std::uint64_t seed) {
  GridDataset ds;
  ds.grid = GridSpec{{size, size}};
  for (std::size_t j = 0; j < n; ++j)
    ds.samples.push_back({test::random_tensor({1, size, size}, seed + 2 * j, 2.0, true),
                          test::random_tensor({1, size, size}, seed + 2 * j + 1, 1.0, true)});
  ds.meta = {{"pde", "synthetic"}};
  return ds;
}


}  // namespace cono::test
