#include <cmath>
#include <random>

#include "cono/errors.hpp"
#include "cono/fft.hpp"
#include "cono/pdedata.hpp"

namespace cono {

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6772u};
  std::mt19937_64 rng(seq);
  return rng();
}

ComplexTensor GaussianRandomField::sample(const GridSpec& grid, std::uint64_t seed) const {
  grid.validate();
  const std::size_t dims = grid.spatial_dims();
  const long K = static_cast<long>(max_mode);
  const long span = 2 * K + 1;
  const std::size_t count = dims == 1 ? span : span * span;

  std::vector<double> weight(count, 0.0);
  double total = 0.0;
  for (std::size_t m = 0; m < count; ++m) {
    const long ky = dims == 1 ? 0 : static_cast<long>(m) / span - K;
    const long kx = static_cast<long>(m) % span - K;
    if (kx == 0 && ky == 0) continue;
    weight[m] = std::pow(1.0 + static_cast<double>(kx * kx + ky * ky), -tau);
    total += weight[m];
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Shape shape{1};
  for (auto s : grid.sizes) shape.push_back(s);
  ComplexTensor field(shape);
  const std::size_t nx = grid.sizes.back();
  const std::size_t ny = dims == 1 ? 1 : grid.sizes[0];
  for (std::size_t m = 0; m < count; ++m) {
    const double re = normal(rng);
    const double im = normal(rng);
    if (weight[m] == 0.0) continue;
    const double amp = sigma * std::sqrt(weight[m] / total);
    const long ky = dims == 1 ? 0 : static_cast<long>(m) / span - K;
    const long kx = static_cast<long>(m) % span - K;
    // Folding onto the grid's bins evaluates the same series at the nodes.
    const auto bx = static_cast<std::size_t>(((kx % static_cast<long>(nx)) + static_cast<long>(nx)) %
                                             static_cast<long>(nx));
    const auto by = static_cast<std::size_t>(((ky % static_cast<long>(ny)) + static_cast<long>(ny)) %
                                             static_cast<long>(ny));
    field[by * nx + bx] += amp * cplx(re, im);
  }
  for (std::size_t d = 0; d < dims; ++d) fft::transform_dim(field, d + 1, true);
  for (auto& z : field.data()) z = cplx(z.real() + mean, 0.0);
  return field;
}

}  // namespace cono
