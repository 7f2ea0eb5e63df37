#pragma once

#include <cstddef>
#include <vector>

#include "cono/autodiff.hpp"
#include "cono/ctensor.hpp"

namespace cono {

/// Low-pass used for x2 up/down sampling.
///
/// taps_per_side == 0 selects the ideal periodic sinc, i.e. spectral
/// zero-padding and truncation. Otherwise a Kaiser-windowed half-band sinc of
/// 2 * taps_per_side + 1 fine-grid taps is applied by circular convolution.
struct ResampleFilter {
  std::size_t up_factor = 2;
  std::size_t taps_per_side = 0;
  double beta = 10.0;

  static ResampleFilter ideal() { return {}; }
  static ResampleFilter kaiser(std::size_t taps_per_side, double beta) { return {2, taps_per_side, beta}; }

  bool is_ideal() const noexcept { return taps_per_side == 0; }
  /// Fine-grid kernel h[-M..M] (empty for the ideal filter). Symmetric, sum 1.
  std::vector<double> kernel() const;
};

/// Band-limited resampling of every line along `dim` to `new_n` points.
/// Values are preserved for content below both Nyquist limits. An even
/// source Nyquist bin is split evenly on the way up; the +-m/2 bins are summed
/// into an even target Nyquist on the way down, so decimating a signal
/// band-limited to the target grid is exact.
ComplexTensor spectral_resample(const ComplexTensor& x, std::size_t dim, std::size_t new_n);
/// Adjoint of spectral_resample(., dim, g.extent(dim)) applied to a field of extent n.
ComplexTensor spectral_resample_adjoint(const ComplexTensor& g, std::size_t dim, std::size_t n);
/// Spectral resampling of every spatial dim of x[C, spatial...].
ComplexTensor resample_field(const ComplexTensor& x, const std::vector<std::size_t>& extents);

/// x2 upsampling of every spatial dim.
ComplexTensor upsample2(const ComplexTensor& x, const ResampleFilter& f);
/// Low-pass at half the fine-grid Nyquist then x2 decimation of every spatial dim.
ComplexTensor downsample2(const ComplexTensor& x, const ResampleFilter& f);
/// Low-pass on the fine grid without decimating.
ComplexTensor lowpass_fine(const ComplexTensor& x, const ResampleFilter& f);

/// Adjoint of upsample2 (= 2^d downsample2 for a symmetric filter).
ComplexTensor upsample2_adjoint(const ComplexTensor& g, const ResampleFilter& f);
/// Adjoint of downsample2.
ComplexTensor downsample2_adjoint(const ComplexTensor& g, const ResampleFilter& f);

namespace ad {

Var upsample2(Var x, const ResampleFilter& f);
Var downsample2(Var x, const ResampleFilter& f);
/// Spectral resampling of all spatial dims to `extents`.
Var resample_field(Var x, const std::vector<std::size_t>& extents);

}  // namespace ad

}  // namespace cono
