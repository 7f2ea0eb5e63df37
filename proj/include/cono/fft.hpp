#pragma once

#include <span>

#include "cono/ctensor.hpp"

namespace cono::fft {

/// In-place unnormalized DFT, X[k] = sum_n x[n] exp(-+2 pi i k n / N).
/// Backed by FFTW with estimated (timing-independent) plans.
void transform(std::span<cplx> x, bool inverse);

/// Direct O(N^2) DFT, used as the slow reference.
void direct(std::span<cplx> x, bool inverse);

/// Unnormalized DFT of every line along `dim`.
void transform_dim(ComplexTensor& x, std::size_t dim, bool inverse);

/// Unnormalized multi-dimensional DFT over all spatial dims of x[C, spatial...].
void transform_spatial(ComplexTensor& x, bool inverse);

}  // namespace cono::fft
