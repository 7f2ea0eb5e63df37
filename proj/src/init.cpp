#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cono/layers.hpp"

namespace cono {

std::mt19937_64 init_stream(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

ComplexTensor complex_glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double sigma = std::sqrt(1.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ComplexTensor t(shape);
  for (auto& z : t.data()) {
    const double modulus = sigma * std::sqrt(-2.0 * std::log1p(-unit(rng)));
    const double phase = std::numbers::pi * (2.0 * unit(rng) - 1.0);
    z = std::polar(modulus, phase);
  }
  return t;
}

ComplexTensor real_glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)));
  ComplexTensor t(shape);
  for (auto& z : t.data()) z = cplx(normal(rng), 0.0);
  return t;
}

ad::Parameter& ParameterStore::add(std::string name, ComplexTensor value, bool real_constrained) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  params_.push_back(std::make_unique<ad::Parameter>(std::move(name), std::move(value), real_constrained));
  return *params_.back();
}

ad::Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw std::out_of_range("no parameter named '" + name + "'");
}

const ad::Parameter& ParameterStore::get(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return true;
  return false;
}

std::vector<ad::Parameter*> ParameterStore::all() {
  std::vector<ad::Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const ad::Parameter*> ParameterStore::all() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::degrees_of_freedom() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size() * (p->real_constrained ? 1 : 2);
  return n;
}

}  // namespace cono
