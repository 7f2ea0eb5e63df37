#pragma once

#include <random>

#include "cono/ctensor.hpp"

namespace cono::test {

inline ComplexTensor random_tensor(const Shape& shape, std::uint64_t seed, double scale = 1.0, bool real = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  ComplexTensor t(shape);
  for (auto& z : t.data()) z = real ? cplx(n(rng), 0.0) : cplx(n(rng), n(rng));
  return t;
}

inline double rel_err(const ComplexTensor& a, const ComplexTensor& b) {
  return sub(a, b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace cono::test
