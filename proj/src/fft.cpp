#include "cono/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

namespace cono::fft {

namespace {

// Plans are keyed by (n, outer, inner, direction). FFTW_ESTIMATE keeps the
// algorithm choice independent of timing, so results are reproducible.
struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, bool>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

struct PlaneCache {
  std::map<std::tuple<std::vector<std::size_t>, std::size_t, bool>, fftw_plan> plans;

  ~PlaneCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlaneCache& plane_cache() {
  static PlaneCache c;
  return c;
}

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_plan plan_for(std::size_t n, std::size_t outer, std::size_t inner, bool inverse, cplx* data) {
  auto& c = cache();
  std::lock_guard lock(c.mu);
  const auto key = std::make_tuple(n, outer, inner, inverse);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  fftw_iodim dim{static_cast<int>(n), static_cast<int>(inner), static_cast<int>(inner)};
  fftw_iodim loops[2] = {
      {static_cast<int>(outer), static_cast<int>(n * inner), static_cast<int>(n * inner)},
      {static_cast<int>(inner), 1, 1},
  };
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_plan p = fftw_plan_guru_dft(1, &dim, 2, loops, buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  c.plans.emplace(key, p);
  return p;
}

fftw_plan plane_plan(const std::vector<std::size_t>& extents, std::size_t howmany, bool inverse, cplx* data) {
  auto& c = plane_cache();
  std::lock_guard lock(cache().mu);  // the FFTW planner is not thread-safe
  auto key = std::make_tuple(extents, howmany, inverse);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  std::vector<int> n(extents.begin(), extents.end());
  int dist = 1;
  for (int e : n) dist *= e;
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_plan p = fftw_plan_many_dft(static_cast<int>(n.size()), n.data(), static_cast<int>(howmany), buf, nullptr, 1,
                                   dist, buf, nullptr, 1, dist, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  c.plans.emplace(std::move(key), p);
  return p;
}

}  // namespace

void transform(std::span<cplx> x, bool inverse) {
  if (x.size() <= 1) return;
  fftw_plan p = plan_for(x.size(), 1, 1, inverse, x.data());
  auto* buf = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(p, buf, buf);
}

void direct(std::span<cplx> x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    cplx s{};
    for (std::size_t j = 0; j < n; ++j) {
      const double ang =
          sign * 2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
      s += x[j] * cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  std::copy(out.begin(), out.end(), x.begin());
}

void transform_dim(ComplexTensor& x, std::size_t dim, bool inverse) {
  const std::size_t n = x.extent(dim);
  if (n <= 1) return;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < dim; ++d) outer *= x.extent(d);
  for (std::size_t d = dim + 1; d < x.rank(); ++d) inner *= x.extent(d);
  fftw_plan p = plan_for(n, outer, inner, inverse, x.raw());
  auto* buf = reinterpret_cast<fftw_complex*>(x.raw());
  fftw_execute_dft(p, buf, buf);
}

void transform_spatial(ComplexTensor& x, bool inverse) {
  if (x.rank() < 2 || x.empty()) return;
  std::vector<std::size_t> extents(x.shape().begin() + 1, x.shape().end());
  fftw_plan p = plane_plan(extents, x.extent(0), inverse, x.raw());
  auto* buf = reinterpret_cast<fftw_complex*>(x.raw());
  fftw_execute_dft(p, buf, buf);
}

}  // namespace cono::fft
