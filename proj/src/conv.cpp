#include "cono/errors.hpp"
#include "cono/layers.hpp"
#include "cono/ops.hpp"
#include <Eigen/Core>
#include <memory>

namespace cono {

namespace {

struct ConvGeometry {
  std::size_t in = 0, out = 0, k = 1, dims = 0, points = 0;
  std::vector<std::size_t> extents;
  std::size_t taps() const {
    std::size_t t = 1;
    for (std::size_t d = 0; d < dims; ++d) t *= k;
    return t;
  }
};

ConvGeometry geometry(const ComplexTensor& w, const ComplexTensor& b, const ComplexTensor& x) {
  if (x.rank() < 2 || x.rank() > 3) throw ShapeError("complex_conv: input must be [C, X] or [C, X, Y], got " + shape_str(x.shape()));
  ConvGeometry g;
  g.dims = x.rank() - 1;
  g.extents = spatial_extents(x);
  g.points = x.size() / x.extent(0);
  if (w.rank() != 2 + g.dims) throw ShapeError("complex_conv: weight " + shape_str(w.shape()) + " vs input " + shape_str(x.shape()));
  g.out = w.extent(0);
  g.in = w.extent(1);
  g.k = w.extent(2);
  for (std::size_t d = 2; d < w.rank(); ++d)
    if (w.extent(d) != g.k) throw ShapeError("complex_conv: non-square kernel " + shape_str(w.shape()));
  if (g.k != 1 && g.k != 3) throw ShapeError("complex_conv: kernel size must be 1 or 3, got " + std::to_string(g.k));
  if (g.in != x.extent(0)) throw ShapeError("complex_conv: weight expects " + std::to_string(g.in) + " channels, input has " + std::to_string(x.extent(0)));
  if (b.size() != g.out) throw ShapeError("complex_conv: bias " + shape_str(b.shape()) + " for " + std::to_string(g.out) + " outputs");
  return g;
}

std::size_t wrap(long i, std::size_t n) {
  const long nl = static_cast<long>(n);
  return static_cast<std::size_t>(((i % nl) + nl) % nl);
}

using RealMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;

// All real matrices below are [points, columns], column-major, so every
// column is one contiguous real or imaginary plane.

// dst[p] = src[p + offset(t)] with circular wrap, for one plane; `add` accumulates
// the adjoint dst[p + offset(t)] += src[p] instead.
template <bool add>
void shift_plane(const ConvGeometry& g, std::size_t t, const double* src, double* dst) {
  const long h = static_cast<long>(g.k / 2);
  auto line = [](const double* s, double* d, std::size_t n, long off) {
    // d[x] <-> s[(x + off) mod n]
    const std::size_t o = static_cast<std::size_t>((off % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n));
    for (std::size_t x = 0; x < n - o; ++x) {
      if constexpr (add) d[x + o] += s[x];
      else d[x] = s[x + o];
    }
    for (std::size_t x = n - o; x < n; ++x) {
      if constexpr (add) d[x + o - n] += s[x];
      else d[x] = s[x + o - n];
    }
  };
  if (g.dims == 1) {
    line(src, dst, g.extents[0], static_cast<long>(t) - h);
    return;
  }
  const std::size_t ny = g.extents[0], nx = g.extents[1];
  const long dy = static_cast<long>(t / g.k) - h;
  const long dx = static_cast<long>(t % g.k) - h;
  for (std::size_t py = 0; py < ny; ++py) {
    const std::size_t sy = wrap(static_cast<long>(py) + dy, ny);
    if constexpr (add) line(src + py * nx, dst + sy * nx, nx, dx);
    else line(src + sy * nx, dst + py * nx, nx, dx);
  }
}

// [points, 2c]: Re planes then Im planes of a channels-first complex field.
RealMat to_planes(const ComplexTensor& x, std::size_t c, std::size_t points) {
  RealMat m(static_cast<Eigen::Index>(points), static_cast<Eigen::Index>(2 * c));
  double* re = m.data();
  double* im = m.data() + c * points;
  const cplx* src = x.raw();
  for (std::size_t i = 0; i < c * points; ++i) {
    re[i] = src[i].real();
    im[i] = src[i].imag();
  }
  return m;
}

ComplexTensor from_planes(const RealMat& m, Shape shape) {
  ComplexTensor x(std::move(shape));
  const std::size_t n = x.size();
  const double* re = m.data();
  const double* im = m.data() + n;
  cplx* dst = x.raw();
  for (std::size_t i = 0; i < n; ++i) dst[i] = cplx(re[i], im[i]);
  return x;
}

// [points, 2 * in * taps]: column (i * taps + t) is plane i shifted by tap t,
// Re parts first, then Im parts.
RealMat im2col(const ComplexTensor& x, const ConvGeometry& g) {
  const std::size_t taps = g.taps(), k = g.in * taps, P = g.points;
  const RealMat planes = to_planes(x, g.in, P);
  RealMat cols(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(2 * k));
  for (std::size_t part = 0; part < 2; ++part)
    for (std::size_t i = 0; i < g.in; ++i)
      for (std::size_t t = 0; t < taps; ++t)
        shift_plane<false>(g, t, planes.data() + (part * g.in + i) * P, cols.data() + (part * k + i * taps + t) * P);
  return cols;
}

ComplexTensor col2im(const RealMat& cols, const ConvGeometry& g) {
  const std::size_t taps = g.taps(), k = g.in * taps, P = g.points;
  RealMat planes = RealMat::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(2 * g.in));
  for (std::size_t part = 0; part < 2; ++part)
    for (std::size_t i = 0; i < g.in; ++i)
      for (std::size_t t = 0; t < taps; ++t)
        shift_plane<true>(g, t, cols.data() + (part * k + i * taps + t) * P, planes.data() + (part * g.in + i) * P);
  Shape shape{g.in};
  shape.insert(shape.end(), g.extents.begin(), g.extents.end());
  return from_planes(planes, std::move(shape));
}

// [[Wr, -Wi], [Wi, Wr]] for a complex [out, k] weight.
RealMat block_weight(const ComplexTensor& w, std::size_t out, std::size_t k) {
  RealMat b(static_cast<Eigen::Index>(2 * out), static_cast<Eigen::Index>(2 * k));
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t i = 0; i < k; ++i) {
      const cplx v = w[o * k + i];
      const auto ro = static_cast<Eigen::Index>(o), ri = static_cast<Eigen::Index>(i);
      const auto O = static_cast<Eigen::Index>(out), K = static_cast<Eigen::Index>(k);
      b(ro, ri) = v.real();
      b(ro, ri + K) = -v.imag();
      b(ro + O, ri) = v.imag();
      b(ro + O, ri + K) = v.real();
    }
  return b;
}

Shape out_shape(const ConvGeometry& g) {
  Shape shape{g.out};
  shape.insert(shape.end(), g.extents.begin(), g.extents.end());
  return shape;
}

RealMat columns(const ComplexTensor& x, const ConvGeometry& g) {
  return g.k == 1 ? to_planes(x, g.in, g.points) : im2col(x, g);
}

ComplexTensor conv_apply(const ComplexTensor& w, const ComplexTensor& b, const RealMat& cols, const ConvGeometry& g) {
  const std::size_t k = g.in * g.taps();
  RealMat y = cols * block_weight(w, g.out, k).transpose();
  ComplexTensor out = from_planes(y, out_shape(g));
  for (std::size_t o = 0; o < g.out; ++o)
    for (std::size_t p = 0; p < g.points; ++p) out[o * g.points + p] += b[o];
  return out;
}

}  // namespace

ComplexTensor complex_conv(const ComplexTensor& weight, const ComplexTensor& bias, const ComplexTensor& x) {
  const ConvGeometry g = geometry(weight, bias, x);
  return conv_apply(weight, bias, columns(x, g), g);
}

namespace ad {

Var complex_conv(Var weight, Var bias, Var x) {
  const ComplexTensor* wv = &weight.value();
  const ConvGeometry g = geometry(*wv, bias.value(), x.value());
  auto cols = std::make_shared<const RealMat>(columns(x.value(), g));
  ComplexTensor y = conv_apply(*wv, bias.value(), *cols, g);
  return weight.tape().record(
      "complex_conv", {weight, bias, x}, std::move(y),
      [wv, g, cols](const ComplexTensor& grad, std::span<const bool> need) {
        std::vector<ComplexTensor> out(3);
        const std::size_t k = g.in * g.taps();
        const RealMat gm = to_planes(grad, g.out, g.points);
        if (need[0]) {
          // conj(x) pairing: Re = gr.xr + gi.xi, Im = gi.xr - gr.xi
          const RealMat m = gm.transpose() * *cols;
          out[0] = ComplexTensor(wv->shape());
          const auto O = static_cast<Eigen::Index>(g.out), K = static_cast<Eigen::Index>(k);
          for (std::size_t o = 0; o < g.out; ++o)
            for (std::size_t i = 0; i < k; ++i) {
              const auto ro = static_cast<Eigen::Index>(o), ri = static_cast<Eigen::Index>(i);
              out[0][o * k + i] = cplx(m(ro, ri) + m(ro + O, ri + K), m(ro + O, ri) - m(ro, ri + K));
            }
        }
        if (need[1]) {
          out[1] = ComplexTensor({g.out});
          for (std::size_t o = 0; o < g.out; ++o) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < g.points; ++p) s += grad[o * g.points + p];
            out[1][o] = s;
          }
        }
        if (need[2]) {
          const RealMat gc = gm * block_weight(*wv, g.out, k);
          if (g.k == 1) {
            Shape shape{g.in};
            shape.insert(shape.end(), g.extents.begin(), g.extents.end());
            out[2] = from_planes(gc, std::move(shape));
          } else {
            out[2] = col2im(gc, g);
          }
        }
        return out;
      });
}

}  // namespace ad

ComplexConv ComplexConv::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                                std::size_t kernel, std::size_t spatial_dims, std::uint64_t seed, bool real) {
  if (kernel != 1 && kernel != 3) throw ShapeError("ComplexConv: kernel size must be 1 or 3");
  if (spatial_dims < 1 || spatial_dims > 2) throw ShapeError("ComplexConv: 1 or 2 spatial dims supported");
  ComplexConv c;
  c.in_channels = in;
  c.out_channels = out;
  c.kernel = kernel;
  c.spatial_dims = spatial_dims;
  Shape shape{out, in};
  std::size_t taps = 1;
  for (std::size_t d = 0; d < spatial_dims; ++d) {
    shape.push_back(kernel);
    taps *= kernel;
  }
  auto rng = init_stream(seed, name + ".weight");
  ComplexTensor w = real ? real_glorot(shape, in * taps, out * taps, rng) : complex_glorot(shape, in * taps, out * taps, rng);
  c.weight = &store.add(name + ".weight", std::move(w), real);
  c.bias = &store.add(name + ".bias", ComplexTensor({out}), real);
  return c;
}

ad::Var ComplexConv::operator()(ad::Tape& tape, ad::Var x) const {
  return ad::complex_conv(tape.param(*weight), tape.param(*bias), x);
}

}  // namespace cono
