#include <doctest.h>

#include <cmath>
#include <limits>

#include "cono/errors.hpp"
#include "cono/train.hpp"
#include "helpers.hpp"

using namespace cono;
using test::random_tensor;

namespace {

ConoConfig small_1d(Ablation ab = Ablation::full) {
  ConoConfig c;
  c.lift_dim = 6;
  c.width = 6;
  c.modes = {8};
  c.alpha_init = {0.9};
  c.unet_levels = 2;
  c.ablation = ab;
  c.seed = 5;
  return c;
}

GridDataset burgers_set(std::size_t n, std::uint64_t seed) {
  BurgersOptions o;
  o.n_samples = n;
  o.nx = 64;
  o.seed = seed;
  o.threads = 1;
  return gen_burgers(o);
}

bool same_report(const RunReport& a, const RunReport& b) {
  if (a.epochs.size() != b.epochs.size() || a.best_epoch != b.best_epoch || a.best_val != b.best_val) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto &x = a.epochs[i], &y = b.epochs[i];
    if (x.train != y.train || x.val != y.val || x.lr != y.lr || x.alphas != y.alphas) return false;
  }
  return a.config_hash == b.config_hash;
}

bool same_parameters(const ConoModel& a, const ConoModel& b) {
  auto pa = a.params().all(), pb = b.params().all();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!pa[i]->value.identical(pb[i]->value)) return false;
  return true;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("relative l2 reference values") {
  const auto u = random_tensor({1, 16}, 1, 1.0, true);
  CHECK(relative_l2({u}, {u}) == 0.0);
  CHECK(relative_l2({scale(u, 2.0)}, {u}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(relative_l2({ComplexTensor(u.shape())}, {u}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(relative_l2({scale(u, 7.5)}, {scale(u, 7.5)}) == 0.0);
  // mean over samples, not pooled
  CHECK(relative_l2({u, ComplexTensor(u.shape())}, {u, scale(u, 3.0)}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(relative_l2({u}, {ComplexTensor(u.shape())}), std::invalid_argument);
  CHECK_THROWS_AS(relative_l2({u}, {random_tensor({1, 8}, 2, 1.0, true)}), ShapeError);
}

TEST_CASE("adam matches a hand-rolled reference") {
  ad::Parameter p("p", ComplexTensor({2}), false);
  ad::Parameter r("r", ComplexTensor({1}), true);
  const AdamOptions opt{0.1, 0.9, 0.999, 1e-8, 0.0};
  Adam adam({&p, &r}, opt);

  p.grad = ComplexTensor({2}, {cplx(1.0, 0.0), cplx(0.0, 0.0)});
  r.grad = ComplexTensor({1}, {cplx(1.0, 0.0)});
  adam.step();
  CHECK(p.value[0].real() == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(p.value[1] == cplx(0.0, 0.0));
  CHECK(r.value[0].imag() == 0.0);

  // independent scalar recursion over a varying gradient sequence
  ad::Parameter q("q", ComplexTensor({1}, {cplx(0.3, -0.2)}), false);
  Adam adam_q({&q}, AdamOptions{0.01, 0.9, 0.999, 1e-8, 0.0});
  double xr = 0.3, xi = -0.2, mr = 0, vr = 0, mi = 0, vi = 0;
  for (int t = 1; t <= 25; ++t) {
    const double gr = std::sin(0.7 * t) + 0.1 * xr, gi = std::cos(1.3 * t) - 0.2 * xi;
    q.grad = ComplexTensor({1}, {cplx(gr, gi)});
    adam_q.step();
    mr = 0.9 * mr + 0.1 * gr;
    vr = 0.999 * vr + 0.001 * gr * gr;
    mi = 0.9 * mi + 0.1 * gi;
    vi = 0.999 * vi + 0.001 * gi * gi;
    const double c1 = 1 - std::pow(0.9, t), c2 = 1 - std::pow(0.999, t);
    xr -= 0.01 * (mr / c1) / (std::sqrt(vr / c2) + 1e-8);
    xi -= 0.01 * (mi / c1) / (std::sqrt(vi / c2) + 1e-8);
  }
  CHECK(q.value[0].real() == doctest::Approx(xr).epsilon(1e-13));
  CHECK(q.value[0].imag() == doctest::Approx(xi).epsilon(1e-13));
  CHECK(adam_q.steps() == 25);
}

TEST_CASE("adam leaves parameters alone with zero grads, zero lr or frozen") {
  const auto init = random_tensor({3, 4}, 3);
  ad::Parameter a("a", init), b("b", init), c("c", init);
  c.frozen = true;
  Adam zero_grad({&a}, AdamOptions{0.1});
  Adam zero_lr({&b}, AdamOptions{0.0});
  Adam frozen({&c}, AdamOptions{0.1});
  for (int i = 0; i < 10; ++i) {
    a.grad = ComplexTensor(init.shape());
    b.grad = random_tensor(init.shape(), 100 + static_cast<std::uint64_t>(i));
    c.grad = random_tensor(init.shape(), 200 + static_cast<std::uint64_t>(i));
    zero_grad.step();
    zero_lr.step();
    frozen.step();
  }
  CHECK(a.value.identical(init));
  CHECK(b.value.identical(init));
  CHECK(c.value.identical(init));
}

TEST_CASE("normalization uses per-channel moments") {
  GridDataset ds;
  ds.grid.sizes = {4};
  ds.samples.push_back({ComplexTensor({1, 4}, {1.0, 3.0, 1.0, 3.0}), ComplexTensor({1, 4}, {5.0, 5.0, 5.0, 5.0})});
  const Normalization n = fit_normalization(ds);
  CHECK(n.in_shift[0] == doctest::Approx(2.0));
  CHECK(n.in_scale[0] == doctest::Approx(1.0));
  CHECK(n.out_shift[0] == doctest::Approx(5.0));
  CHECK(n.out_scale[0] == 1.0);  // constant channel keeps unit scale
}

TEST_CASE("one sample is fitted to 1e-3") {
  const GridDataset ds = burgers_set(1, 3);
  ConoModel m(small_1d());
  TrainOptions opt;
  opt.epochs = 200;
  opt.batch = 1;
  opt.lr = 3e-3;
  opt.seed = 1;
  const RunReport r = fit(m, ds, ds, opt);
  CHECK(r.epochs.back().train <= 1e-3);
  CHECK(r.best_val <= 1e-3);
  // best-val parameters are restored
  CHECK(evaluate(m, ds) == doctest::Approx(r.best_val).epsilon(1e-12));
}

TEST_CASE("training loss falls over the first epochs and runs are reproducible") {
  const GridDataset all = burgers_set(40, 11);
  auto [train, val, test] = split(all, 2);
  TrainOptions opt;
  opt.epochs = 5;
  opt.batch = 8;
  opt.seed = 4;
  opt.threads = 1;
  ConoModel a(small_1d()), b(small_1d()), c(small_1d());
  const RunReport ra = fit(a, train, val, opt);
  CHECK(ra.epochs.back().train < ra.epochs.front().train);
  CHECK(ra.epochs.size() == 5);
  for (std::size_t i = 0; i < ra.epochs.size(); ++i) CHECK(ra.epochs[i].epoch == i);
  const RunReport rb = fit(b, train, val, opt);
  CHECK(same_report(ra, rb));
  CHECK(same_parameters(a, b));
  opt.threads = 3;
  const RunReport rc = fit(c, train, val, opt);
  CHECK(same_report(ra, rc));
  CHECK(same_parameters(a, c));
  CHECK(evaluate(a, test, 64) == evaluate(a, test));
  const std::string text = ra.to_text();
  CHECK(text.find("best_val=") != std::string::npos);
  CHECK(text.find("epoch.4.alpha.0=") != std::string::npos);
}

TEST_CASE("fourier ablation keeps alpha pinned through training") {
  const GridDataset ds = burgers_set(8, 5);
  ConoModel m(small_1d(Ablation::fourier));
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch = 4;
  const RunReport r = fit(m, ds, ds, opt);
  for (const auto& e : r.epochs)
    for (const auto& block : e.alphas)
      for (double a : block) CHECK(a == 1.0);
  CHECK(mean_alphas(m) == std::vector<double>{1.0});
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  const GridDataset ds = burgers_set(4, 6);
  ConoModel m(small_1d());
  m.params().get("r.weight").value[0] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  TrainOptions opt;
  opt.epochs = 1;
  opt.batch = 2;
  try {
    fit(m, ds, ds, opt);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
    CHECK(msg.find("r.weight") != std::string::npos);
  }
}

TEST_CASE("fit rejects empty or mismatched data") {
  const GridDataset ds = burgers_set(2, 7);
  ConoModel m(small_1d());
  CHECK_THROWS_AS(fit(m, GridDataset{}, ds, {}), std::invalid_argument);
  ConoConfig two = small_1d();
  two.in_channels = 2;
  ConoModel m2(two);
  CHECK_THROWS_AS(fit(m2, ds, ds, {}), ShapeError);
}

}  // TEST_SUITE
