#include "cono/layers.hpp"
#include "cono/ops.hpp"

namespace cono {

ComplexTensor alias_free_activation(const ComplexTensor& x, const ResampleFilter& filter) {
  return downsample2(cgelu(upsample2(x, filter)), filter);
}

ComplexTensor alias_free_activation_fine(const ComplexTensor& x, const ResampleFilter& filter) {
  return lowpass_fine(cgelu(upsample2(x, filter)), filter);
}

namespace ad {

Var alias_free_activation(Var x, const ResampleFilter& filter) {
  auto [fine, deriv] = cgelu_with_derivative(upsample2(x.value(), filter));
  ComplexTensor y = downsample2(fine, filter);
  auto d = std::make_shared<const ComplexTensor>(std::move(deriv));
  return x.tape().record("alias_free_activation", {x}, std::move(y),
                         [d, filter](const ComplexTensor& g, std::span<const bool>) {
                           ComplexTensor gf = downsample2_adjoint(g, filter);
                           const ComplexTensor& u = *d;
                           for (std::size_t i = 0; i < gf.size(); ++i)
                             gf[i] = cplx(gf[i].real() * u[i].real(), gf[i].imag() * u[i].imag());
                           return std::vector<ComplexTensor>{upsample2_adjoint(gf, filter)};
                         });
}

Var activate(Var x, Activation kind, const ResampleFilter& filter) {
  return kind == Activation::alias_free ? alias_free_activation(x, filter) : cgelu(x);
}

}  // namespace ad

}  // namespace cono
