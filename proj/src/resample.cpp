#include "cono/resample.hpp"

#include <cmath>
#include <numbers>

#include "cono/errors.hpp"
#include "cono/fft.hpp"

namespace cono {

namespace {

double bessel_i0(double x) {
  // power series; converges quickly for the beta range used by windows
  double sum = 1.0, term = 1.0;
  const double q = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Index of signed frequency s in an FFT array of length n.
std::size_t bin(long s, std::size_t n) {
  const long nl = static_cast<long>(n);
  return static_cast<std::size_t>(((s % nl) + nl) % nl);
}

struct Lines {
  std::size_t outer = 1, inner = 1;
};

Lines lines_of(const ComplexTensor& x, std::size_t dim) {
  Lines l;
  for (std::size_t d = 0; d < dim; ++d) l.outer *= x.extent(d);
  for (std::size_t d = dim + 1; d < x.rank(); ++d) l.inner *= x.extent(d);
  return l;
}

// Circular convolution along dim with a symmetric kernel h[-M..M].
ComplexTensor convolve_along(const ComplexTensor& x, std::size_t dim, const std::vector<double>& h) {
  const std::size_t n = x.extent(dim);
  const auto [outer, inner] = lines_of(x, dim);
  const long m = static_cast<long>(h.size() / 2);
  ComplexTensor y(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    const cplx* src = x.raw() + o * n * inner;
    cplx* dst = y.raw() + o * n * inner;
    for (std::size_t j = 0; j < n; ++j) {
      cplx* out = dst + j * inner;
      for (long t = -m; t <= m; ++t) {
        const double w = h[static_cast<std::size_t>(t + m)];
        if (w == 0.0) continue;
        const cplx* in = src + bin(static_cast<long>(j) - t, n) * inner;
        for (std::size_t i = 0; i < inner; ++i) out[i] += w * in[i];
      }
    }
  }
  return y;
}

ComplexTensor zero_insert(const ComplexTensor& x, std::size_t dim) {
  const std::size_t n = x.extent(dim);
  const auto [outer, inner] = lines_of(x, dim);
  Shape shape = x.shape();
  shape[dim] = 2 * n;
  ComplexTensor y(shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j)
      std::copy_n(x.raw() + (o * n + j) * inner, inner, y.raw() + (o * 2 * n + 2 * j) * inner);
  return y;
}

ComplexTensor decimate(const ComplexTensor& x, std::size_t dim) {
  const std::size_t n = x.extent(dim);
  if (n % 2 != 0) throw ShapeError("downsample2: odd extent " + std::to_string(n) + " along dim " + std::to_string(dim));
  const auto [outer, inner] = lines_of(x, dim);
  Shape shape = x.shape();
  shape[dim] = n / 2;
  ComplexTensor y(shape);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n / 2; ++j)
      std::copy_n(x.raw() + (o * n + 2 * j) * inner, inner, y.raw() + (o * (n / 2) + j) * inner);
  return y;
}

ComplexTensor resample_impl(const ComplexTensor& x, std::size_t dim, std::size_t new_n, double split_w, double fold_w);

// Ideal x2 resampling of all spatial dims at once: bins with |k| below half
// the coarse extent are kept, the coarse Nyquist and everything above it is
// dropped. `to` gives the output spatial extents.
ComplexTensor ideal_nd(const ComplexTensor& x, const std::vector<std::size_t>& to) {
  const std::vector<std::size_t> from = spatial_extents(x);
  ComplexTensor spec = x;
  fft::transform_spatial(spec, false);
  Shape shape{x.extent(0)};
  shape.insert(shape.end(), to.begin(), to.end());
  ComplexTensor out(shape);
  std::size_t n_in = 1, n_out = 1;
  for (std::size_t d = 0; d < from.size(); ++d) {
    n_in *= from[d];
    n_out *= to[d];
  }
  const double s = 1.0 / static_cast<double>(n_in);
  // signed frequencies kept per dim: -(c/2 - 1) .. c/2 - 1 for coarse extent c
  std::vector<long> half(from.size());
  for (std::size_t d = 0; d < from.size(); ++d) half[d] = static_cast<long>(std::min(from[d], to[d]) / 2);
  for (std::size_t c = 0; c < x.extent(0); ++c) {
    const cplx* src = spec.raw() + c * n_in;
    cplx* dst = out.raw() + c * n_out;
    if (from.size() == 1) {
      for (long f = 1 - half[0]; f < half[0]; ++f) dst[bin(f, to[0])] = s * src[bin(f, from[0])];
    } else {
      for (long fy = 1 - half[0]; fy < half[0]; ++fy) {
        const cplx* srow = src + bin(fy, from[0]) * from[1];
        cplx* drow = dst + bin(fy, to[0]) * to[1];
        for (long fx = 1 - half[1]; fx < half[1]; ++fx) drow[bin(fx, to[1])] = s * srow[bin(fx, from[1])];
      }
    }
  }
  fft::transform_spatial(out, true);
  return out;
}

std::vector<std::size_t> scaled_extents(const ComplexTensor& x, bool up) {
  std::vector<std::size_t> e = spatial_extents(x);
  for (std::size_t d = 0; d < e.size(); ++d) {
    if (!up && e[d] % 2 != 0)
      throw ShapeError("downsample2: odd extent " + std::to_string(e[d]) + " along dim " + std::to_string(d + 1));
    e[d] = up ? 2 * e[d] : e[d] / 2;
  }
  return e;
}

// The ideal filter passes |k| < n/2 of the coarse grid and blocks its Nyquist
// bin, so everything it produces is strictly band-limited: half-sample shifts
// are then exact and a x2 decimation commutes with odd fine-grid shifts.
ComplexTensor up_dim(const ComplexTensor& x, std::size_t dim, const ResampleFilter& f) {
  if (f.is_ideal()) return resample_impl(x, dim, 2 * x.extent(dim), 0.0, 0.0);
  std::vector<double> h = f.kernel();
  for (auto& v : h) v *= 2.0;
  return convolve_along(zero_insert(x, dim), dim, h);
}

ComplexTensor down_dim(const ComplexTensor& x, std::size_t dim, const ResampleFilter& f) {
  if (x.extent(dim) % 2 != 0)
    throw ShapeError("downsample2: odd extent " + std::to_string(x.extent(dim)) + " along dim " + std::to_string(dim));
  if (f.is_ideal()) return resample_impl(x, dim, x.extent(dim) / 2, 0.0, 0.0);
  return decimate(convolve_along(x, dim, f.kernel()), dim);
}

ComplexTensor lowpass_dim(const ComplexTensor& x, std::size_t dim, const ResampleFilter& f) {
  if (!f.is_ideal()) return convolve_along(x, dim, f.kernel());
  const std::size_t n = x.extent(dim);
  return resample_impl(resample_impl(x, dim, n / 2, 0.0, 0.0), dim, n, 0.0, 0.0);
}

void check_field(const ComplexTensor& x, const char* what) {
  if (x.rank() < 2) throw ShapeError(std::string(what) + ": expected [C, spatial...], got " + shape_str(x.shape()));
}

}  // namespace

std::vector<double> ResampleFilter::kernel() const {
  if (is_ideal()) return {};
  if (up_factor != 2) throw std::invalid_argument("ResampleFilter: only x2 resampling is supported");
  const long m = static_cast<long>(taps_per_side);
  std::vector<double> h(2 * taps_per_side + 1, 0.0);
  const double norm = bessel_i0(beta);
  double odd_sum = 0.0;
  for (long t = -m; t <= m; ++t) {
    if (t == 0 || t % 2 == 0) continue;
    const double r = static_cast<double>(t) / static_cast<double>(m + 1);
    const double window = bessel_i0(beta * std::sqrt(1.0 - r * r)) / norm;
    const double arg = std::numbers::pi * static_cast<double>(t) / 2.0;
    h[static_cast<std::size_t>(t + m)] = 0.5 * std::sin(arg) / arg * window;
    odd_sum += h[static_cast<std::size_t>(t + m)];
  }
  // Half-band: the even phase is exactly {1/2}, the odd phase is rescaled to
  // sum to 1/2, so each polyphase component has unit gain at DC.
  for (long t = -m; t <= m; ++t)
    if (t % 2 != 0) h[static_cast<std::size_t>(t + m)] *= 0.5 / odd_sum;
  h[static_cast<std::size_t>(m)] = 0.5;
  return h;
}

namespace {

// split_w: weight of each +-n/2 copy of an even source Nyquist bin when growing;
// fold_w: weight of each +-m/2 source bin feeding an even target Nyquist when shrinking.
ComplexTensor resample_impl(const ComplexTensor& x, std::size_t dim, std::size_t new_n, double split_w, double fold_w) {
  const std::size_t n = x.extent(dim);
  if (new_n == 0) throw ShapeError("spectral_resample: zero target size");
  if (new_n == n) return x;
  ComplexTensor spec = x;
  fft::transform_dim(spec, dim, false);
  const auto [outer, inner] = lines_of(x, dim);
  Shape shape = x.shape();
  shape[dim] = new_n;
  ComplexTensor out(shape);
  const long lo = -static_cast<long>(std::min(n, new_n) / 2);
  const long hi = static_cast<long>((std::min(n, new_n) + 1) / 2);  // exclusive
  const bool split = new_n > n && n % 2 == 0;
  const bool fold = new_n < n && new_n % 2 == 0;
  const double s = 1.0 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    const cplx* src = spec.raw() + o * n * inner;
    cplx* dst = out.raw() + o * new_n * inner;
    for (long f = lo; f < hi; ++f) {
      const cplx* a = src + bin(f, n) * inner;
      cplx* b = dst + bin(f, new_n) * inner;
      if (f == lo && split) {
        cplx* b2 = dst + bin(-f, new_n) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          b[i] = split_w * s * a[i];
          b2[i] = split_w * s * a[i];
        }
      } else if (f == lo && fold) {
        const cplx* a2 = src + bin(-f, n) * inner;
        for (std::size_t i = 0; i < inner; ++i) b[i] = fold_w * s * (a[i] + a2[i]);
      } else {
        for (std::size_t i = 0; i < inner; ++i) b[i] = s * a[i];
      }
    }
  }
  fft::transform_dim(out, dim, true);
  return out;
}

}  // namespace

ComplexTensor spectral_resample(const ComplexTensor& x, std::size_t dim, std::size_t new_n) {
  return resample_impl(x, dim, new_n, 0.5, 1.0);
}

ComplexTensor spectral_resample_adjoint(const ComplexTensor& g, std::size_t dim, std::size_t n) {
  const std::size_t m = g.extent(dim);
  return scale(resample_impl(g, dim, n, 1.0, 0.5), static_cast<double>(m) / static_cast<double>(n));
}

ComplexTensor resample_field(const ComplexTensor& x, const std::vector<std::size_t>& extents) {
  check_field(x, "resample_field");
  if (extents.size() != x.rank() - 1)
    throw ShapeError("resample_field: " + std::to_string(extents.size()) + " target extents for field " +
                     shape_str(x.shape()));
  ComplexTensor y = x;
  for (std::size_t d = 0; d < extents.size(); ++d) y = spectral_resample(y, d + 1, extents[d]);
  return y;
}

ComplexTensor upsample2(const ComplexTensor& x, const ResampleFilter& f) {
  check_field(x, "upsample2");
  if (f.is_ideal() && x.rank() <= 3) return ideal_nd(x, scaled_extents(x, true));
  ComplexTensor y = x;
  for (std::size_t d = 1; d < x.rank(); ++d) y = up_dim(y, d, f);
  return y;
}

ComplexTensor downsample2(const ComplexTensor& x, const ResampleFilter& f) {
  check_field(x, "downsample2");
  if (f.is_ideal() && x.rank() <= 3) return ideal_nd(x, scaled_extents(x, false));
  ComplexTensor y = x;
  for (std::size_t d = 1; d < x.rank(); ++d) y = down_dim(y, d, f);
  return y;
}

ComplexTensor lowpass_fine(const ComplexTensor& x, const ResampleFilter& f) {
  check_field(x, "lowpass_fine");
  if (f.is_ideal() && x.rank() <= 3) return ideal_nd(ideal_nd(x, scaled_extents(x, false)), spatial_extents(x));
  ComplexTensor y = x;
  for (std::size_t d = 1; d < x.rank(); ++d) y = lowpass_dim(y, d, f);
  return y;
}

ComplexTensor upsample2_adjoint(const ComplexTensor& g, const ResampleFilter& f) {
  return scale(downsample2(g, f), std::pow(2.0, static_cast<double>(g.rank() - 1)));
}

ComplexTensor downsample2_adjoint(const ComplexTensor& g, const ResampleFilter& f) {
  return scale(upsample2(g, f), std::pow(0.5, static_cast<double>(g.rank() - 1)));
}

namespace ad {

Var upsample2(Var x, const ResampleFilter& f) {
  return x.tape().record("upsample2", {x}, cono::upsample2(x.value(), f),
                         [f](const ComplexTensor& g, std::span<const bool>) {
                           return std::vector<ComplexTensor>{upsample2_adjoint(g, f)};
                         });
}

Var downsample2(Var x, const ResampleFilter& f) {
  return x.tape().record("downsample2", {x}, cono::downsample2(x.value(), f),
                         [f](const ComplexTensor& g, std::span<const bool>) {
                           return std::vector<ComplexTensor>{downsample2_adjoint(g, f)};
                         });
}

Var resample_field(Var x, const std::vector<std::size_t>& extents) {
  const std::vector<std::size_t> from = spatial_extents(x.value());
  if (from == extents) return x;
  return x.tape().record("resample_field", {x}, cono::resample_field(x.value(), extents),
                         [from](const ComplexTensor& g, std::span<const bool>) {
                           ComplexTensor y = g;
                           for (std::size_t d = 0; d < from.size(); ++d) y = spectral_resample_adjoint(y, d + 1, from[d]);
                           return std::vector<ComplexTensor>{std::move(y)};
                         });
}

}  // namespace ad

}  // namespace cono
