#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "cono/errors.hpp"
#include "cono/pdedata.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cono;
using std::numbers::pi;
using namespace cono::test;

TEST_SUITE("pdedata") {
  TEST_CASE("random field is real, mean-controlled and grid-consistent") {
    GaussianRandomField grf;
    grf.mean = 0.5;
    const auto fine = grf.sample(GridSpec{{128, 128}}, 42);
    const auto coarse = grf.sample(GridSpec{{32, 32}}, 42);
    CHECK(fine.is_real());
    double mean = 0.0;
    for (const auto& z : fine.data()) mean += z.real();
    CHECK(mean / fine.size() == doctest::Approx(0.5).epsilon(1e-12));
    double worst = 0.0;
    for (std::size_t i = 0; i < 32; ++i)
      for (std::size_t j = 0; j < 32; ++j)
        worst = std::max(worst, std::abs(coarse[i * 32 + j] - fine[(4 * i) * 128 + 4 * j]));
    CHECK(worst <= 1e-12);

    // pointwise variance over many draws
    double var = 0.0;
    const int draws = 400;
    for (int s = 0; s < draws; ++s) {
      const auto f = GaussianRandomField{}.sample(GridSpec{{64}}, sample_seed(3, s));
      for (const auto& z : f.data()) var += z.real() * z.real();
    }
    CHECK(var / (draws * 64) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(GaussianRandomField{}.sample(GridSpec{{64}}, 9).identical(GaussianRandomField{}.sample(GridSpec{{64}}, 9)));
  }

  TEST_CASE("small-amplitude Burgers follows heat decay") {
    const std::size_t n = 128;
    const double eps = 1e-6, nu = 0.1, t = 0.1;
    std::vector<double> u0(n), exact(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n;
      u0[i] = eps * std::sin(2 * pi * x);
      exact[i] = eps * std::exp(-4 * pi * pi * nu * t) * std::sin(2 * pi * x);
    }
    CHECK(rel_l2(burgers_solve(u0, nu, t), exact) <= 1e-4);
  }

  TEST_CASE("Burgers matches the Cole-Hopf solution") {
    const std::size_t n = 128;
    const double nu = 0.1;
    std::vector<double> u0(n);
    for (std::size_t i = 0; i < n; ++i) u0[i] = std::sin(2 * pi * static_cast<double>(i) / n);
    for (double t : {0.05, 0.1, 0.3}) {
      const double err = rel_l2(burgers_solve(u0, nu, t), cole_hopf(n, nu, t));
      MESSAGE("t = " << t << " rel L2 " << err);
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("strong diffusion drives Burgers to the mean") {
    GaussianRandomField grf;
    grf.mean = 0.3;
    const auto f = grf.sample(GridSpec{{64}}, 5);
    std::vector<double> u0(64);
    double mean = 0.0;
    for (std::size_t i = 0; i < 64; ++i) mean += (u0[i] = f[i].real()) / 64.0;
    for (double v : burgers_solve(u0, 1e3, 0.1)) CHECK(std::abs(v - mean) <= 1e-10);
  }

  TEST_CASE("Burgers generator conserves the mean and is deterministic") {
    BurgersOptions opt;
    opt.n_samples = 6;
    opt.nx = 64;
    opt.seed = 7;
    opt.threads = 1;
    const auto a = gen_burgers(opt);
    opt.threads = 3;
    const auto b = gen_burgers(opt);
    CHECK(a == b);
    a.validate();
    for (const auto& s : a.samples) {
      double m0 = 0.0, m1 = 0.0;
      for (std::size_t i = 0; i < 64; ++i) {
        m0 += s.input[i].real();
        m1 += s.output[i].real();
      }
      CHECK(std::abs(m0 - m1) / 64.0 <= 1e-12);
      CHECK(s.output.is_real());
    }
    CHECK(a.meta.at("pde") == "burgers");
  }

  TEST_CASE("Burgers step floor reports the sample") {
    BurgersOptions opt;
    opt.n_samples = 2;
    opt.nx = 32;
    opt.grf.sigma = 50.0;
    opt.solver.min_dt_ratio = 0.5;
    opt.threads = 1;
    try {
      gen_burgers(opt);
      FAIL("expected a step-floor error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
    }
    CHECK_THROWS_AS(burgers_solve(std::vector<double>(48, 0.0), 0.1, 0.1), ShapeError);
  }

  TEST_CASE("Darcy matches a dense LU solve") {
    const std::size_t n = 32;
    const auto ones = ComplexTensor::full({1, n, n}, 1.0);
    const auto sol = darcy_solve(ones, ones);
    const Eigen::VectorXd ref = dense_darcy(ones, 1.0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 1; j < n; ++j) {
        const double d = sol.u[i * n + j].real() - ref((i - 1) * (n - 1) + (j - 1));
        num += d * d;
        den += ref((i - 1) * (n - 1) + (j - 1)) * ref((i - 1) * (n - 1) + (j - 1));
      }
    CHECK(std::sqrt(num / den) <= 1e-10);
    CHECK(sol.residual <= 1e-10);

    DarcyOptions opt;
    opt.n_samples = 1;
    opt.nx = n;
    opt.seed = 4;
    const auto ds = gen_darcy(opt);
    const Eigen::VectorXd ref2 = dense_darcy(ds.samples[0].input, 1.0);
    num = den = 0.0;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 1; j < n; ++j) {
        const double r = ref2((i - 1) * (n - 1) + (j - 1));
        num += std::pow(ds.samples[0].output[i * n + j].real() - r, 2);
        den += r * r;
      }
    CHECK(std::sqrt(num / den) <= 1e-10);
  }

  TEST_CASE("Darcy manufactured solution converges at second order") {
    auto error_at = [](std::size_t n) {
      const auto ones = ComplexTensor::full({1, n, n}, 1.0);
      ComplexTensor f({1, n, n});
      std::vector<double> exact(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double x = static_cast<double>(j) / n, y = static_cast<double>(i) / n;
          exact[i * n + j] = std::sin(pi * x) * std::sin(pi * y);
          f[i * n + j] = 2 * pi * pi * exact[i * n + j];
        }
      const auto sol = darcy_solve(ones, f);
      double worst = 0.0;
      for (std::size_t k = 0; k < n * n; ++k) worst = std::max(worst, std::abs(sol.u[k].real() - exact[k]));
      return worst;
    };
    const double ratio = error_at(32) / error_at(64);
    MESSAGE("refinement ratio " << ratio);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }

  TEST_CASE("Darcy zero forcing, maximum principle and residual") {
    DarcyOptions opt;
    opt.n_samples = 3;
    opt.nx = 32;
    opt.beta = 0.0;
    for (const auto& s : gen_darcy(opt).samples) CHECK(s.output.max_abs() == 0.0);
    opt.beta = 1.0;
    const auto ds = gen_darcy(opt);
    for (const auto& s : ds.samples) {
      for (const auto& z : s.output.data()) CHECK(z.real() >= 0.0);
      std::set<double> levels;
      for (const auto& z : s.input.data()) levels.insert(z.real());
      CHECK(levels.size() == 2);
      CHECK(*levels.begin() == 3.0);
      CHECK(*levels.rbegin() == 12.0);
      CHECK(darcy_solve(s.input, ComplexTensor::full({1, 32, 32}, 1.0)).residual <= 1e-10);
    }
    CHECK(gen_darcy(opt) == ds);
    opt.nx = 8;
    CHECK_THROWS_AS(gen_darcy(opt), ShapeError);
  }

  TEST_CASE("nested Darcy grids share coefficients") {
    DarcyOptions opt;
    opt.n_samples = 2;
    opt.nx = 64;
    opt.seed = 12;
    const auto fine = gen_darcy(opt);
    opt.nx = 32;
    const auto coarse = gen_darcy(opt);
    const auto sub = subsample(fine, 2);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(sub.samples[j].input.identical(coarse.samples[j].input));
      CHECK(test::rel_err(sub.samples[j].output, coarse.samples[j].output) <= 0.05);
    }
  }

  TEST_CASE("noise is pooled, input-only and seeded") {
    const auto ds = synthetic(16, 256, 100);
    CHECK(add_noise(ds, 0.0, 1) == ds);
    const auto noisy = add_noise(ds, 0.05, 1);
    CHECK(add_noise(ds, 0.05, 1) == noisy);
    CHECK(!(add_noise(ds, 0.05, 2) == noisy));
    double sq = 0.0, sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      CHECK(noisy.samples[j].output.identical(ds.samples[j].output));
      for (std::size_t k = 0; k < ds.samples[j].input.size(); ++k) {
        const double d = noisy.samples[j].input[k].real() - ds.samples[j].input[k].real();
        sum += d;
        sq += d * d;
        ++count;
      }
    }
    CHECK(count >= 1000000);
    const double var = sq / count - (sum / count) * (sum / count);
    CHECK(var == doctest::Approx(0.05 * 0.05 * ds.input_variance()).epsilon(0.05));
  }

  TEST_CASE("split is disjoint, exhaustive and seeded") {
    const auto ds = synthetic(10, 4, 1);
    const auto [tr, va, te] = split(ds, 3);
    CHECK(tr.size() == 8);
    CHECK(va.size() == 1);
    CHECK(te.size() == 1);
    std::set<double> seen;
    for (const auto* part : {&tr, &va, &te})
      for (const auto& s : part->samples) seen.insert(s.input[0].real());
    std::set<double> all;
    for (const auto& s : ds.samples) all.insert(s.input[0].real());
    CHECK(seen == all);
    const auto [tr2, va2, te2] = split(ds, 3);
    CHECK(tr2 == tr);
    CHECK(te2 == te);
    CHECK_THROWS(split(synthetic(3, 4, 1), 3));
    CHECK_THROWS(split(ds, {0.5, 0.2, 0.2}, 3));
  }

  TEST_CASE("dataset resampling") {
    const auto ds = synthetic(2, 16, 7);
    CHECK(resample(ds, 16) == ds);
    const auto back = resample(resample(ds, 32), 16);
    for (std::size_t j = 0; j < 2; ++j) CHECK(test::rel_err(back.samples[j].input, ds.samples[j].input) <= 1e-10);

    GridDataset sine;
    sine.grid = GridSpec{{64}};
    ComplexTensor f({1, 64});
    for (std::size_t i = 0; i < 64; ++i) f[i] = std::sin(2 * pi * 3 * i / 64.0) + 0.5 * std::cos(2 * pi * 7 * i / 64.0);
    sine.samples.push_back({f, f});
    const auto up = resample(sine, 128);
    double worst = 0.0;
    for (std::size_t i = 0; i < 128; ++i) {
      const double exact = std::sin(2 * pi * 3 * i / 128.0) + 0.5 * std::cos(2 * pi * 7 * i / 128.0);
      worst = std::max(worst, std::abs(up.samples[0].input[i].real() - exact));
    }
    CHECK(worst <= 1e-10);
    CHECK(up.meta.at("target") == "resampled");
  }

  TEST_CASE("GFD files round trip and reject corruption") {
    const auto dir = std::filesystem::temp_directory_path() / "cono_gfd_test";
    std::filesystem::create_directories(dir);
    auto ds = synthetic(3, 8, 5);
    ds.in_channels = 1;
    ds.meta["nu"] = "0.1";
    write_gfd(ds, dir / "a.gfd");
    CHECK(read_gfd(dir / "a.gfd") == ds);

    GridDataset empty;
    empty.grid = GridSpec{{16}};
    write_gfd(empty, dir / "e.gfd");
    const auto e = read_gfd(dir / "e.gfd");
    CHECK(e.size() == 0);
    CHECK(e.grid == empty.grid);

    std::string bytes;
    {
      std::ifstream in(dir / "a.gfd", std::ios::binary);
      bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto write = [&](const std::string& b) {
      std::ofstream out(dir / "bad.gfd", std::ios::binary | std::ios::trunc);
      out.write(b.data(), static_cast<std::streamsize>(b.size()));
    };
    auto bad = bytes;
    bad[0] = 'X';
    write(bad);
    CHECK_THROWS_AS(read_gfd(dir / "bad.gfd"), FormatError);
    bad = bytes;
    bad[4] = 9;
    write(bad);
    CHECK_THROWS_AS(read_gfd(dir / "bad.gfd"), FormatError);
    write(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_gfd(dir / "bad.gfd"), FormatError);
    write(bytes.substr(0, 10));
    CHECK_THROWS_AS(read_gfd(dir / "bad.gfd"), FormatError);
    write(bytes + "x");
    CHECK_THROWS_AS(read_gfd(dir / "bad.gfd"), FormatError);
    CHECK_THROWS_AS(read_gfd(dir / "missing.gfd"), FormatError);
    std::filesystem::remove_all(dir);
  }
}
