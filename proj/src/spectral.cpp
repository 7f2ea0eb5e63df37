#include "cono/errors.hpp"
#include "cono/layers.hpp"
#include "cono/ops.hpp"

namespace cono {

namespace {

struct Window {
  std::vector<std::size_t> extents, modes, starts;
  std::size_t retained = 1;
};

Window window_of(const ComplexTensor& x, const std::vector<std::size_t>& modes, std::size_t n_alpha,
                 const ComplexTensor& weights) {
  if (x.rank() < 2) throw ShapeError("kernel_integral: input must be [C, spatial...], got " + shape_str(x.shape()));
  Window w;
  w.extents = spatial_extents(x);
  if (modes.size() != w.extents.size() || n_alpha != w.extents.size())
    throw ShapeError("kernel_integral: need one mode count and one order per spatial dim of " + shape_str(x.shape()));
  w.modes = modes;
  for (std::size_t d = 0; d < modes.size(); ++d) {
    if (modes[d] == 0 || modes[d] > w.extents[d])
      throw ShapeError("kernel_integral: " + std::to_string(modes[d]) + " modes along a dim of extent " +
                       std::to_string(w.extents[d]));
    w.starts.push_back(window_start(w.extents[d], modes[d]));
    w.retained *= modes[d];
  }
  if (weights.rank() != 2 + modes.size() || weights.extent(1) != x.extent(0) ||
      !std::equal(modes.begin(), modes.end(), weights.shape().begin() + 2))
    throw ShapeError("kernel_integral: weights " + shape_str(weights.shape()) + " do not fit input " +
                     shape_str(x.shape()) + " with modes " + shape_str(modes));
  return w;
}

// Y[o, k] = sum_i W[o, i, k] X[i, k]
ComplexTensor mix(const ComplexTensor& w, const ComplexTensor& x) {
  const std::size_t co = w.extent(0), ci = w.extent(1), m = x.size() / ci;
  Shape shape = x.shape();
  shape[0] = co;
  ComplexTensor y(shape);
  for (std::size_t o = 0; o < co; ++o) {
    cplx* yo = y.raw() + o * m;
    for (std::size_t i = 0; i < ci; ++i) {
      const cplx* wi = w.raw() + (o * ci + i) * m;
      const cplx* xi = x.raw() + i * m;
      for (std::size_t k = 0; k < m; ++k) yo[k] += wi[k] * xi[k];
    }
  }
  return y;
}

// X[i, k] = sum_o conj(W[o, i, k]) G[o, k]
ComplexTensor mix_adjoint(const ComplexTensor& w, const ComplexTensor& g) {
  const std::size_t co = w.extent(0), ci = w.extent(1), m = g.size() / co;
  Shape shape = g.shape();
  shape[0] = ci;
  ComplexTensor x(shape);
  for (std::size_t o = 0; o < co; ++o) {
    const cplx* go = g.raw() + o * m;
    for (std::size_t i = 0; i < ci; ++i) {
      const cplx* wi = w.raw() + (o * ci + i) * m;
      cplx* xi = x.raw() + i * m;
      for (std::size_t k = 0; k < m; ++k) xi[k] += std::conj(wi[k]) * go[k];
    }
  }
  return x;
}

// dW[o, i, k] = G[o, k] conj(X[i, k])
ComplexTensor mix_weight_grad(const Shape& w_shape, const ComplexTensor& g, const ComplexTensor& x) {
  const std::size_t co = w_shape[0], ci = w_shape[1], m = x.size() / ci;
  ComplexTensor dw(w_shape);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t i = 0; i < ci; ++i) {
      cplx* d = dw.raw() + (o * ci + i) * m;
      const cplx* go = g.raw() + o * m;
      const cplx* xi = x.raw() + i * m;
      for (std::size_t k = 0; k < m; ++k) d[k] = go[k] * std::conj(xi[k]);
    }
  return dw;
}

ComplexTensor adjoint_of(const ComplexTensor& a) {
  const std::size_t r = a.extent(0), c = a.extent(1);
  ComplexTensor t({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t[j * r + i] = std::conj(a[i * c + j]);
  return t;
}

}  // namespace

std::size_t window_start(std::size_t n, std::size_t modes) { return n / 2 - modes / 2; }

ComplexTensor kernel_integral(const ComplexTensor& x, const std::vector<double>& alphas, const ComplexTensor& weights,
                              const std::vector<std::size_t>& modes) {
  const Window win = window_of(x, modes, alphas.size(), weights);
  ComplexTensor cur = x;
  std::vector<ComplexTensor> rows;
  for (std::size_t d = 0; d < win.extents.size(); ++d) {
    rows.push_back(frft::build_plan(win.extents[d])->matrix_rows(alphas[d], win.starts[d], win.modes[d]));
    cur = apply_along(rows.back(), cur, d + 1);
  }
  cur = mix(weights, cur);
  // F^-alpha is the adjoint of F^alpha, so its retained columns are rows^H.
  for (std::size_t d = 0; d < win.extents.size(); ++d) cur = apply_along(adjoint_of(rows[d]), cur, d + 1);
  return cur;
}

namespace ad {

Var kernel_integral(Var x, Var alphas, Var weights, const std::vector<std::size_t>& modes) {
  const ComplexTensor& av = alphas.value();
  const ComplexTensor* wv = &weights.value();
  const Window win = window_of(x.value(), modes, av.size(), *wv);
  const std::size_t dims = win.extents.size();

  struct Saved {
    std::vector<ComplexTensor> a, a_h, da, fwd_in, inv_in;
    ComplexTensor retained;
  };
  auto s = std::make_shared<Saved>();
  ComplexTensor cur = x.value();
  for (std::size_t d = 0; d < dims; ++d) {
    const auto plan = frft::build_plan(win.extents[d]);
    s->a.push_back(plan->matrix_rows(av[d].real(), win.starts[d], win.modes[d]));
    s->a_h.push_back(adjoint_of(s->a.back()));
    s->da.push_back(plan->matrix_rows_dalpha(av[d].real(), win.starts[d], win.modes[d]));
    s->fwd_in.push_back(cur);
    cur = apply_along(s->a[d], cur, d + 1);
  }
  s->retained = cur;
  cur = mix(*wv, cur);
  for (std::size_t d = 0; d < dims; ++d) {
    s->inv_in.push_back(cur);
    cur = apply_along(s->a_h[d], cur, d + 1);
  }

  const Shape w_shape = wv->shape();
  return x.tape().record(
      "kernel_integral", {x, alphas, weights}, std::move(cur),
      [s, wv, w_shape, dims](const ComplexTensor& g, std::span<const bool> need) {
        std::vector<ComplexTensor> out(3);
        std::vector<double> dalpha(dims, 0.0);
        ComplexTensor gc = g;
        for (std::size_t d = dims; d-- > 0;) {
          if (need[1]) dalpha[d] += inner(gc, apply_along(adjoint_of(s->da[d]), s->inv_in[d], d + 1)).real();
          gc = apply_along(s->a[d], gc, d + 1);
        }
        if (need[2]) out[2] = mix_weight_grad(w_shape, gc, s->retained);
        if (need[0] || need[1]) {
          gc = mix_adjoint(*wv, gc);
          for (std::size_t d = dims; d-- > 0;) {
            if (need[1]) dalpha[d] += inner(gc, apply_along(s->da[d], s->fwd_in[d], d + 1)).real();
            if (need[0] || d > 0) gc = apply_along(s->a_h[d], gc, d + 1);
          }
          if (need[0]) out[0] = std::move(gc);
        }
        if (need[1]) {
          out[1] = ComplexTensor({dims});
          for (std::size_t d = 0; d < dims; ++d) out[1][d] = cplx(dalpha[d], 0.0);
        }
        return out;
      });
}

}  // namespace ad

SpectralBlock SpectralBlock::create(ParameterStore& store, const std::string& name, std::size_t channels,
                                    const std::vector<std::size_t>& modes, const std::vector<double>& alpha_init,
                                    std::size_t unet_levels, bool use_pointwise, bool use_unet, std::uint64_t seed,
                                    Activation act, ResampleFilter filter) {
  if (alpha_init.size() != modes.size()) throw ShapeError("SpectralBlock: one order per spatial dim required");
  SpectralBlock b;
  b.use_pointwise = use_pointwise;
  b.use_unet = use_unet;
  b.activation = act;
  b.filter = filter;
  const std::size_t dims = modes.size();
  if (use_pointwise) b.pointwise = ComplexConv::create(store, name + ".w", channels, channels, 1, dims, seed);
  Shape shape{channels, channels};
  shape.insert(shape.end(), modes.begin(), modes.end());
  auto rng = init_stream(seed, name + ".k.weights");
  b.spectral.modes = modes;
  b.spectral.weights = &store.add(name + ".k.weights", complex_glorot(shape, channels, channels, rng));
  ComplexTensor alpha({dims});
  for (std::size_t d = 0; d < dims; ++d) alpha[d] = alpha_init[d];
  b.alpha = &store.add(name + ".k.alpha", std::move(alpha), true);
  if (use_unet) b.unet = ComplexUNet::create(store, name + ".u", channels, unet_levels, dims, seed, act, filter);
  return b;
}

ad::Var SpectralBlock::pre_activation(ad::Tape& tape, ad::Var x) const {
  ad::Var v = ad::kernel_integral(x, tape.param(*alpha), tape.param(*spectral.weights), spectral.modes);
  if (use_pointwise) v = ad::add(v, pointwise(tape, x));
  if (use_unet) v = ad::add(v, unet(tape, x));
  return v;
}

ad::Var SpectralBlock::operator()(ad::Tape& tape, ad::Var x) const {
  return ad::activate(pre_activation(tape, x), activation, filter);
}

}  // namespace cono
