#include <algorithm>
#include <cmath>
#include <numbers>

#include "cono/errors.hpp"
#include "cono/fft.hpp"
#include "cono/pdedata.hpp"

namespace cono {

namespace {

struct BurgersRhs {
  std::size_t n;
  std::vector<double> wave;  // 2 pi k
  std::vector<bool> keep;    // 2/3 rule
  std::vector<cplx> work;

  explicit BurgersRhs(std::size_t n_) : n(n_), wave(n_), keep(n_), work(n_) {
    for (std::size_t i = 0; i < n; ++i) {
      const long k = i <= n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
      wave[i] = 2.0 * std::numbers::pi * static_cast<double>(k);
      keep[i] = 3 * std::labs(k) < static_cast<long>(n);
    }
    wave[n / 2] = 0.0;  // odd derivative of the Nyquist mode
  }

  // -(u^2 / 2)_x in spectral space, product formed from the dealiased field.
  void operator()(const std::vector<cplx>& uh, std::vector<cplx>& out) {
    for (std::size_t i = 0; i < n; ++i) work[i] = keep[i] ? uh[i] : cplx(0.0);
    fft::transform(work, true);
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& z : work) {
      const double u = z.real() * inv;
      z = cplx(0.5 * u * u, 0.0);
    }
    fft::transform(work, false);
    for (std::size_t i = 0; i < n; ++i) out[i] = keep[i] ? cplx(0.0, -wave[i]) * work[i] : cplx(0.0);
  }
};

}  // namespace

std::vector<double> burgers_solve(std::vector<double> u0, double nu, double t_end, const BurgersSettings& settings) {
  const std::size_t n = u0.size();
  if (n < 4 || (n & (n - 1)) != 0) throw ShapeError("burgers: nx must be a power of two >= 4");
  if (!(nu > 0.0)) throw std::invalid_argument("burgers: nu must be positive");
  if (t_end <= 0.0) return u0;

  BurgersRhs rhs(n);
  std::vector<cplx> uh(u0.begin(), u0.end());
  fft::transform(uh, false);

  const double dx = 1.0 / static_cast<double>(n);
  const double min_dt = settings.min_dt_ratio * t_end;
  std::vector<cplx> k1(n), k2(n), k3(n), k4(n), tmp(n), field(n);
  std::vector<double> e_half(n), e_full(n);
  double t = 0.0;
  double last_h = -1.0;
  while (t < t_end) {
    field = uh;
    fft::transform(field, true);
    double umax = 0.0;
    for (const auto& z : field) umax = std::max(umax, std::abs(z.real()) / static_cast<double>(n));
    if (!std::isfinite(umax)) throw NumericalError("burgers: non-finite state at t = " + format_double(t));
    double h = umax > 0.0 ? settings.cfl * dx / umax : t_end;
    h = std::min(h, t_end - t);
    if (h < min_dt && t_end - t > min_dt)
      throw NumericalError("burgers: adaptive step " + format_double(h) + " below floor at t = " + format_double(t));
    if (h != last_h) {
      for (std::size_t i = 0; i < n; ++i) {
        const double lam = -nu * rhs.wave[i] * rhs.wave[i];
        e_half[i] = std::exp(0.5 * h * lam);
        e_full[i] = std::exp(h * lam);
      }
      last_h = h;
    }
    // Integrating-factor RK4: the diffusion term is integrated exactly.
    rhs(uh, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = e_half[i] * (uh[i] + 0.5 * h * k1[i]);
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = e_half[i] * uh[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = e_full[i] * uh[i] + h * e_half[i] * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      uh[i] = e_full[i] * uh[i] + (h / 6.0) * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
    t += h;
  }

  fft::transform(uh, true);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = uh[i].real() / static_cast<double>(n);
  return u;
}

GridDataset gen_burgers(const BurgersOptions& opt) {
  if (opt.nx < 4 || (opt.nx & (opt.nx - 1)) != 0) throw ShapeError("gen_burgers: nx must be a power of two >= 4");
  if (!(opt.nu > 0.0)) throw std::invalid_argument("gen_burgers: nu must be positive");
  GridDataset ds;
  ds.grid = GridSpec{{opt.nx}};
  ds.samples.resize(opt.n_samples);
  parallel_for(opt.n_samples, opt.threads, [&](std::size_t j) {
    const auto u0 = opt.grf.sample(ds.grid, sample_seed(opt.seed, j));
    std::vector<double> init(opt.nx);
    for (std::size_t i = 0; i < opt.nx; ++i) init[i] = u0[i].real();
    std::vector<double> u;
    try {
      u = burgers_solve(init, opt.nu, opt.dt_out, opt.solver);
    } catch (const NumericalError& e) {
      throw NumericalError("sample " + std::to_string(j) + ": " + e.what());
    }
    ds.samples[j] = GridSample{u0, ComplexTensor::from_real({1, opt.nx}, u)};
  });
  ds.meta = {{"pde", "burgers"},
             {"nu", format_double(opt.nu)},
             {"dt_out", format_double(opt.dt_out)},
             {"seed", std::to_string(opt.seed)},
             {"grf_tau", format_double(opt.grf.tau)},
             {"grf_sigma", format_double(opt.grf.sigma)},
             {"grf_mean", format_double(opt.grf.mean)},
             {"grf_max_mode", std::to_string(opt.grf.max_mode)},
             {"solver", "pseudo-spectral, 2/3 dealiasing, integrating-factor RK4"},
             {"cfl", format_double(opt.solver.cfl)},
             {"target", "native"}};
  return ds;
}

}  // namespace cono
