#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "cono/ctensor.hpp"

namespace cono {

/// One (input, output) pair of real fields, channels-first.
struct GridSample {
  ComplexTensor input;
  ComplexTensor output;
};

struct GridDataset {
  std::vector<GridSample> samples;
  GridSpec grid;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  /// Free-form key/value metadata (pde, parameters, seed, solver settings).
  std::map<std::string, std::string> meta;

  std::size_t size() const noexcept { return samples.size(); }
  /// Throws ShapeError unless every sample matches grid and channel counts.
  void validate() const;
  /// Pooled variance of every input value.
  double input_variance() const;

  bool operator==(const GridDataset& other) const;
};

/// Periodic Gaussian random field on the unit interval / square.
///
/// Coefficients live on the fixed mode set |k_d| <= max_mode and are drawn
/// from the seed alone, so every grid samples the same continuous field.
/// Mode k has variance proportional to (1 + |k|^2)^-tau; the field has zero
/// mode removed, then `mean` added, and pointwise std `sigma`.
struct GaussianRandomField {
  double tau = 2.5;
  double sigma = 1.0;
  double mean = 0.0;
  std::size_t max_mode = 16;

  /// Field on `grid` as a real [1, sizes...] tensor.
  ComplexTensor sample(const GridSpec& grid, std::uint64_t seed) const;
};

/// Independent stream seed for sample `index` of a dataset.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

struct BurgersSettings {
  double cfl = 0.5;
  /// Steps shorter than min_dt_ratio * dt_out count as a CFL failure.
  double min_dt_ratio = 1e-9;
};

/// Integrates u_t + (u^2/2)_x = nu u_xx on the periodic unit interval up to
/// t_end, pseudo-spectrally with 2/3 dealiasing and integrating-factor RK4.
/// Throws NumericalError when the adaptive step underflows.
std::vector<double> burgers_solve(std::vector<double> u0, double nu, double t_end,
                                  const BurgersSettings& settings = {});

struct BurgersOptions {
  std::size_t n_samples = 64;
  std::size_t nx = 128;
  double nu = 0.1;
  double dt_out = 0.1;
  std::uint64_t seed = 0;
  GaussianRandomField grf{};
  BurgersSettings solver{};
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// (u0, u(dt_out)) pairs from GRF initial conditions.
GridDataset gen_burgers(const BurgersOptions& opt);

struct DarcySolve {
  ComplexTensor u;  // [1, n, n], zero on the boundary nodes
  std::size_t iterations = 0;
  double residual = 0.0;  // ||A u - f|| / ||f||
};

struct DarcySettings {
  double tol = 1e-12;  // on ||A u - f|| / ||f||
  std::size_t max_iter = 20000;
};

/// Solves -div(a grad u) = f on the unit square with u = 0 on the boundary.
///
/// Nodes sit at (i/n, j/n); row and column 0 are the boundary (x = 0 and,
/// periodically, x = 1), the interior nodes 1..n-1 are unknown. Five-point
/// finite-volume stencil with harmonic-mean face conductivities; Jacobi
/// preconditioned conjugate gradients. `a` and `f` are [1, n, n] real fields.
DarcySolve darcy_solve(const ComplexTensor& a, const ComplexTensor& f, const DarcySettings& settings = {});

struct DarcyOptions {
  std::size_t n_samples = 64;
  std::size_t nx = 64;
  double beta = 1.0;
  std::uint64_t seed = 0;
  double a_low = 3.0;
  double a_high = 12.0;
  GaussianRandomField grf{};
  DarcySettings solver{};
  std::size_t threads = 0;
};

/// Binarised GRF conductivity a (a_high where the field is >= 0) paired with
/// the solution of -div(a grad u) = beta.
GridDataset gen_darcy(const DarcyOptions& opt);

/// x <- x + gamma * N(0, var_D) on inputs, var_D pooled over all inputs.
GridDataset add_noise(const GridDataset& ds, double gamma, std::uint64_t seed);

/// Seeded shuffle into train / val / test. Throws if any part is empty.
std::tuple<GridDataset, GridDataset, GridDataset> split(const GridDataset& ds,
                                                         std::vector<double> ratios, std::uint64_t seed);
std::tuple<GridDataset, GridDataset, GridDataset> split(const GridDataset& ds, std::uint64_t seed);

/// First `count` samples.
GridDataset take(const GridDataset& ds, std::size_t count);

/// Spectral resampling of every field to `new_size` points per dim.
GridDataset resample(const GridDataset& ds, std::size_t new_size);
/// Keeps every `factor`-th grid node per dim (nested vertex grids).
GridDataset subsample(const GridDataset& ds, std::size_t factor);

/// "GFD1" little-endian file: header, metadata text, inputs, outputs.
void write_gfd(const GridDataset& ds, const std::filesystem::path& path);
GridDataset read_gfd(const std::filesystem::path& path);

std::string encode_meta(const std::map<std::string, std::string>& meta);
std::map<std::string, std::string> decode_meta(const std::string& text);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware).
/// The first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace cono
