#include <cmath>

#include "cono/errors.hpp"
#include "cono/pdedata.hpp"

namespace cono {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Interior operator on the (n-1)^2 unknowns; faces carry harmonic means.
struct DarcyOperator {
  std::size_t n, m;  // grid nodes, unknowns per dim
  std::vector<double> east, north, diag;

  DarcyOperator(const ComplexTensor& a, std::size_t n_) : n(n_), m(n_ - 1), east(n_ * n_), north(n_ * n_), diag(m * m) {
    const double inv_h2 = static_cast<double>(n) * static_cast<double>(n);
    auto at = [&](std::size_t i, std::size_t j) { return a[(i % n) * n + (j % n)].real(); };
    // east[i][j]: face between (i, j) and (i, j+1); north: (i, j) and (i+1, j)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        east[i * n + j] = inv_h2 * harmonic(at(i, j), at(i, j + 1));
        north[i * n + j] = inv_h2 * harmonic(at(i, j), at(i + 1, j));
      }
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 1; j < n; ++j)
        diag[(i - 1) * m + (j - 1)] =
            east[i * n + j] + east[i * n + j - 1] + north[i * n + j] + north[(i - 1) * n + j];
  }

  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t gi = i + 1, gj = j + 1, k = i * m + j;
        double v = diag[k] * u[k];
        if (j + 1 < m) v -= east[gi * n + gj] * u[k + 1];
        if (j > 0) v -= east[gi * n + gj - 1] * u[k - 1];
        if (i + 1 < m) v -= north[gi * n + gj] * u[k + m];
        if (i > 0) v -= north[(gi - 1) * n + gj] * u[k - m];
        out[k] = v;
      }
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

DarcySolve darcy_solve(const ComplexTensor& a, const ComplexTensor& f, const DarcySettings& settings) {
  if (a.rank() != 3 || a.extent(0) != 1 || a.extent(1) != a.extent(2))
    throw ShapeError("darcy: coefficient must be [1, n, n], got " + shape_str(a.shape()));
  if (f.shape() != a.shape()) throw ShapeError("darcy: forcing shape " + shape_str(f.shape()) + " differs");
  const std::size_t n = a.extent(1);
  if (n < 4) throw ShapeError("darcy: need n >= 4");
  for (const auto& z : a.data())
    if (!(z.real() > 0.0)) throw std::invalid_argument("darcy: conductivity must be positive");

  const DarcyOperator op(a, n);
  const std::size_t m = n - 1, count = m * m;
  std::vector<double> b(count), x(count, 0.0), r(count), z(count), p(count), q(count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) b[i * m + j] = f[(i + 1) * n + (j + 1)].real();

  DarcySolve out;
  out.u = ComplexTensor({1, n, n});
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return out;

  r = b;
  for (std::size_t k = 0; k < count; ++k) z[k] = r[k] / op.diag[k];
  p = z;
  double rz = dot(r, z);
  double res = 1.0;
  std::size_t it = 0;
  while (it < settings.max_iter) {
    op.apply(p, q);
    const double step = rz / dot(p, q);
    for (std::size_t k = 0; k < count; ++k) {
      x[k] += step * p[k];
      r[k] -= step * q[k];
    }
    ++it;
    res = std::sqrt(dot(r, r)) / bnorm;
    if (!std::isfinite(res)) break;
    if (res <= settings.tol) break;
    for (std::size_t k = 0; k < count; ++k) z[k] = r[k] / op.diag[k];
    const double rz_next = dot(r, z);
    const double ratio = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < count; ++k) p[k] = z[k] + ratio * p[k];
  }

  // Report the true residual rather than the recurrence.
  op.apply(x, q);
  double rr = 0.0;
  for (std::size_t k = 0; k < count; ++k) rr += (b[k] - q[k]) * (b[k] - q[k]);
  out.residual = std::sqrt(rr) / bnorm;
  out.iterations = it;
  if (!std::isfinite(out.residual) || out.residual > 10.0 * settings.tol)
    throw NumericalError("darcy: CG did not converge after " + std::to_string(it) +
                         " iterations, residual " + format_double(out.residual));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out.u[(i + 1) * n + (j + 1)] = x[i * m + j];
  return out;
}

GridDataset gen_darcy(const DarcyOptions& opt) {
  if (opt.nx < 16) throw ShapeError("gen_darcy: nx must be >= 16");
  if (!std::isfinite(opt.beta)) throw std::invalid_argument("gen_darcy: beta must be finite");
  if (!(opt.a_low > 0.0 && opt.a_high > 0.0)) throw std::invalid_argument("gen_darcy: levels must be positive");
  GridDataset ds;
  ds.grid = GridSpec{{opt.nx, opt.nx}};
  ds.samples.resize(opt.n_samples);
  const auto forcing = ComplexTensor::full({1, opt.nx, opt.nx}, cplx(opt.beta, 0.0));
  parallel_for(opt.n_samples, opt.threads, [&](std::size_t j) {
    auto a = opt.grf.sample(ds.grid, sample_seed(opt.seed, j));
    for (auto& z : a.data()) z = z.real() >= 0.0 ? opt.a_high : opt.a_low;
    DarcySolve sol;
    try {
      sol = darcy_solve(a, forcing, opt.solver);
    } catch (const NumericalError& e) {
      throw NumericalError("sample " + std::to_string(j) + ": " + e.what());
    }
    ds.samples[j] = GridSample{std::move(a), std::move(sol.u)};
  });
  ds.meta = {{"pde", "darcy"},
             {"beta", format_double(opt.beta)},
             {"seed", std::to_string(opt.seed)},
             {"a_low", format_double(opt.a_low)},
             {"a_high", format_double(opt.a_high)},
             {"grf_tau", format_double(opt.grf.tau)},
             {"grf_sigma", format_double(opt.grf.sigma)},
             {"grf_max_mode", std::to_string(opt.grf.max_mode)},
             {"solver", "5-point finite volume, harmonic faces, Jacobi PCG"},
             {"cg_tol", format_double(opt.solver.tol)},
             {"target", "native"}};
  return ds;
}

}  // namespace cono
