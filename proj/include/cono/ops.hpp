#pragma once

#include <utility>

#include "cono/autodiff.hpp"

// Differentiable primitives recorded on a Tape. Each op computes its value
// with the plain tensor routines and stores a hand-written adjoint.
namespace cono::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise complex product.
Var mul(Var a, Var b);
Var scale(Var a, cplx s);
Var conj(Var a);
/// Sum of all elements as a [1] tensor.
Var sum(Var a);
/// Keep the real part, zero the imaginary part.
Var real(Var a);
/// Re(sum(conj(c) * a)) as a real [1] tensor; a linear probe used by tests.
Var probe(Var a, const ComplexTensor& c);

/// y[o, p] = sum_i w[o, i] x[i, p].
Var matmul_channels(Var w, Var x);
/// x[c, p] + b[c].
Var add_channel_bias(Var x, Var b);
/// Stack along the channel axis.
Var concat_channels(Var a, Var b);

/// GeLU(Re z) + i GeLU(Im z), GeLU(x) = x Phi(x).
Var cgelu(Var z);

/// ||pred - target||^2 / ||target||^2 as a real [1] tensor.
Var squared_error_ratio(Var pred, const ComplexTensor& target);

}  // namespace cono::ad

namespace cono {

double gelu(double x) noexcept;
double gelu_derivative(double x) noexcept;
ComplexTensor cgelu(const ComplexTensor& z);
/// cgelu(z) and the per-component derivatives (gelu'(Re z), gelu'(Im z)) packed as a complex.
std::pair<ComplexTensor, ComplexTensor> cgelu_with_derivative(const ComplexTensor& z);

}  // namespace cono
