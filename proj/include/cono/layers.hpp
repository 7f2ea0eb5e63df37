#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cono/autodiff.hpp"
#include "cono/ctensor.hpp"
#include "cono/frft.hpp"
#include "cono/resample.hpp"

namespace cono {

// ---- activations ----------------------------------------------------------

/// Upsample x2, CGeLU on the fine grid, low-pass at the original Nyquist,
/// decimate x2. Applied per spatial field of x[C, spatial...].
ComplexTensor alias_free_activation(const ComplexTensor& x, const ResampleFilter& filter);
/// Steps up to and including the low-pass, i.e. the fine-grid signal before decimation.
ComplexTensor alias_free_activation_fine(const ComplexTensor& x, const ResampleFilter& filter);

enum class Activation { alias_free, pointwise };

namespace ad {
Var alias_free_activation(Var x, const ResampleFilter& filter);
/// CGeLU either pointwise or alias-free.
Var activate(Var x, Activation kind, const ResampleFilter& filter);
}  // namespace ad

// ---- initialisation -------------------------------------------------------

/// Deterministic generator for one named tensor under a model seed.
std::mt19937_64 init_stream(std::uint64_t seed, const std::string& name);
/// Complex Glorot: modulus Rayleigh with sigma^2 = 1 / (fan_in + fan_out), phase uniform.
ComplexTensor complex_glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
/// Real Glorot normal, variance 2 / (fan_in + fan_out), imaginary parts zero.
ComplexTensor real_glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

/// Owns named parameters; names are unique and insertion order is kept.
class ParameterStore {
 public:
  ad::Parameter& add(std::string name, ComplexTensor value, bool real_constrained = false);
  ad::Parameter& get(const std::string& name);
  const ad::Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<ad::Parameter*> all();
  std::vector<const ad::Parameter*> all() const;
  std::size_t count() const noexcept { return params_.size(); }
  /// Total number of scalar degrees of freedom (complex entries count twice
  /// unless real-constrained).
  std::size_t degrees_of_freedom() const;

 private:
  std::vector<std::unique_ptr<ad::Parameter>> params_;
};

// ---- convolution ----------------------------------------------------------

/// Circular same-padded convolution with kernel size 1 or 3 per spatial dim.
/// weight [C_out, C_in, k(, k)], bias [C_out];
/// y[o, p] = b[o] + sum_{i, t} w[o, i, t] x[i, p + t - k/2].
struct ComplexConv {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t spatial_dims = 1;
  ad::Parameter* weight = nullptr;
  ad::Parameter* bias = nullptr;

  /// Registers `<name>.weight` and `<name>.bias`. Real layers constrain both to zero imaginary part.
  static ComplexConv create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                            std::size_t kernel, std::size_t spatial_dims, std::uint64_t seed, bool real = false);

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
};

/// Plain forward used by oracles.
ComplexTensor complex_conv(const ComplexTensor& weight, const ComplexTensor& bias, const ComplexTensor& x);

namespace ad {
Var complex_conv(Var weight, Var bias, Var x);
}

// ---- kernel integral ------------------------------------------------------

/// Centred window of `modes` samples per dim in the transformed domain.
struct SpectralWeights {
  std::vector<std::size_t> modes;
  ad::Parameter* weights = nullptr;  // [C_out, C_in, modes...]
};

/// First retained index along a dim of extent n: floor(n/2) - floor(m/2).
std::size_t window_start(std::size_t n, std::size_t modes);

/// F^alpha per dim, keep the central window, mix channels per retained
/// sample, zero elsewhere, F^-alpha per dim.
ComplexTensor kernel_integral(const ComplexTensor& x, const std::vector<double>& alphas,
                              const ComplexTensor& weights, const std::vector<std::size_t>& modes);

namespace ad {
/// alphas is a real [D] tensor; its gradient uses the eigenbasis derivative.
Var kernel_integral(Var x, Var alphas, Var weights, const std::vector<std::size_t>& modes);
}

// ---- complex UNET ---------------------------------------------------------

struct ComplexUNet {
  std::size_t channels = 0;
  std::size_t levels = 0;
  std::vector<ComplexConv> encoder;
  ComplexConv bottleneck;
  std::vector<ComplexConv> decoder;  // decoder[l] runs at level l
  ComplexConv head;
  Activation activation = Activation::alias_free;
  ResampleFilter filter;

  static ComplexUNet create(ParameterStore& store, const std::string& name, std::size_t channels, std::size_t levels,
                            std::size_t spatial_dims, std::uint64_t seed, Activation act, ResampleFilter filter);

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
};

// ---- spectral block -------------------------------------------------------

struct SpectralBlock {
  bool use_pointwise = true;  // W
  bool use_unet = true;       // K'
  ComplexConv pointwise;
  SpectralWeights spectral;
  ad::Parameter* alpha = nullptr;  // real [D]
  ComplexUNet unet;
  Activation activation = Activation::alias_free;
  ResampleFilter filter;

  static SpectralBlock create(ParameterStore& store, const std::string& name, std::size_t channels,
                              const std::vector<std::size_t>& modes, const std::vector<double>& alpha_init,
                              std::size_t unet_levels, bool use_pointwise, bool use_unet, std::uint64_t seed,
                              Activation act, ResampleFilter filter);

  /// Sum of the enabled branches before the activation.
  ad::Var pre_activation(ad::Tape& tape, ad::Var x) const;
  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
};

}  // namespace cono
