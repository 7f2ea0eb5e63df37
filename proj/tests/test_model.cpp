#include <filesystem>
#include <fstream>
#include <set>

#include "cono/errors.hpp"
#include "cono/model.hpp"
#include "cono/ops.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cono;
using cono::test::random_tensor;
using cono::test::rel_err;

namespace {

ConoConfig small_2d(Ablation ab = Ablation::full) {
  ConoConfig c;
  c.in_channels = 1;
  c.out_channels = 1;
  c.lift_dim = 4;
  c.width = 3;
  c.modes = {4, 4};
  c.alpha_init = {0.9, 1.05};
  c.unet_levels = 2;
  c.ablation = ab;
  c.seed = 11;
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cono_test_" + name);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation and text round trip") {
  ConoConfig c = small_2d();
  CHECK_NOTHROW(c.validate());
  CHECK(ConoConfig::from_text(c.to_text()) == c);
  CHECK(c.hash().size() == 16);
  ConoConfig bad = c;
  bad.lift_dim = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.alpha_init = {1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ConoConfig::from_map({{"widht", "3"}}), doctest::Contains("widht"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ablation("none"), std::invalid_argument);
}

TEST_CASE("building twice with one seed gives identical parameters") {
  ConoModel a(small_2d()), b(small_2d());
  const auto pa = a.params().all();
  const auto pb = b.params().all();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value.identical(pb[i]->value));
  }
  ConoConfig other = small_2d();
  other.seed = 12;
  ConoModel c(other);
  CHECK_FALSE(c.params().get("r.weight").value.identical(a.params().get("r.weight").value));
}

TEST_CASE("parameter names are unique and orders are real") {
  ConoModel m(small_2d());
  std::set<std::string> names;
  for (const auto* p : m.params().all()) names.insert(p->name);
  CHECK(names.size() == m.params().count());
  for (const auto& b : m.blocks()) CHECK(b.alpha->real_constrained);
}

TEST_CASE("output is real and has the input extent") {
  ConoModel m(small_2d());
  for (std::size_t n : {16u, 32u}) {
    const auto y = m.predict(random_tensor({1, n, n}, n, 1.0, true));
    CHECK(y.shape() == Shape{1, n, n});
    CHECK(y.max_abs_imag() == 0.0);
    CHECK(y.all_finite());
  }
  CHECK(m.predict(ComplexTensor({1, 16, 16})).all_finite());
  CHECK_THROWS_AS(m.predict(random_tensor({2, 16, 16}, 1)), ShapeError);
  CHECK_THROWS(m.predict(random_tensor({1, 16, 16}, 1)));  // complex input
}

TEST_CASE("parameter count does not depend on the grid") {
  ConoModel m(small_2d());
  const auto dof = m.params().degrees_of_freedom();
  m.predict(random_tensor({1, 16, 16}, 1, 1.0, true));
  m.predict(random_tensor({1, 64, 64}, 2, 1.0, true));
  CHECK(m.params().degrees_of_freedom() == dof);
}

TEST_CASE("forward is bit-reproducible") {
  ConoModel a(small_2d()), b(small_2d());
  const auto x = random_tensor({1, 16, 16}, 3, 1.0, true);
  CHECK(a.predict(x).identical(b.predict(x)));
  CHECK(a.predict(x).identical(a.predict(x)));
}

TEST_CASE("ablation wiring") {
  SUBCASE("fourier pins the order") {
    ConoModel m(small_2d(Ablation::fourier));
    for (const auto& a : m.alphas())
      for (double v : a) CHECK(v == 1.0);
    ad::Tape t;
    t.backward(ad::probe(m.forward(t, random_tensor({1, 16, 16}, 4, 1.0, true)), random_tensor({1, 16, 16}, 5)));
    for (auto& [p, g] : t.parameter_grads())
      if (p->name.find("alpha") != std::string::npos) CHECK(g.max_abs() == 0.0);
  }
  SUBCASE("no_bias keeps only the kernel integral") {
    ConoModel m(small_2d(Ablation::no_bias));
    REQUIRE(m.blocks().size() == 1);
    const auto& b = m.blocks()[0];
    CHECK_FALSE(b.use_pointwise);
    CHECK_FALSE(b.use_unet);
    ad::Tape t;
    const auto x = t.constant(random_tensor({3, 16, 16}, 6));
    const auto k = ad::kernel_integral(x, t.param(*b.alpha), t.param(*b.spectral.weights), b.spectral.modes);
    CHECK(b.pre_activation(t, x).value().identical(k.value()));
  }
  SUBCASE("vanilla is a single Fourier block without UNET") {
    ConoConfig c = small_2d(Ablation::vanilla);
    c.n_blocks = 3;
    ConoModel m(c);
    REQUIRE(m.blocks().size() == 1);
    CHECK(m.blocks()[0].use_pointwise);
    CHECK_FALSE(m.blocks()[0].use_unet);
    CHECK(m.blocks()[0].alpha->frozen);
  }
  SUBCASE("no_alias uses pointwise activations") {
    ConoModel m(small_2d(Ablation::no_alias));
    CHECK(m.blocks()[0].activation == Activation::pointwise);
    CHECK(m.blocks()[0].unet.activation == Activation::pointwise);
  }
}

TEST_CASE("gradient reaches every trainable parameter") {
  ConoModel m(small_2d());
  ad::Tape t;
  t.backward(ad::probe(m.forward(t, random_tensor({1, 16, 16}, 7, 1.0, true)), random_tensor({1, 16, 16}, 8)));
  std::size_t reached = 0;
  for (auto& [p, g] : t.parameter_grads()) {
    INFO(p->name);
    CHECK(g.max_abs() > 0.0);
    ++reached;
  }
  CHECK(reached == m.trainable().size());
}

TEST_CASE("full model gradcheck at 16x16 with 2 channels") {
  ConoConfig c = small_2d();
  c.in_channels = 2;
  c.out_channels = 2;
  c.width = 2;
  ConoModel m(c);
  // non-zero biases so every path is exercised
  for (auto* p : m.params().all())
    if (p->name.ends_with(".bias")) {
      p->value = random_tensor(p->value.shape(), 9, 0.1, p->real_constrained);
    }
  const auto x = random_tensor({2, 16, 16}, 10, 1.0, true);
  const auto target = random_tensor({2, 16, 16}, 11, 1.0, true);
  auto fn = [&](ad::Tape& t) { return ad::squared_error_ratio(m.forward(t, x), target); };
  CHECK(ad::gradcheck(fn, m.trainable(), 1e-6, 12) <= 1e-4);
  // a wider step removes round-off on the smallest components
  CHECK(ad::gradcheck(fn, m.trainable(), 1e-4, 12) <= 1e-5);
}

TEST_CASE("integer shifts commute with the whole network") {
  ConoConfig c = small_2d();
  c.alpha_init = {1.0, 1.0};
  ConoModel m(c);
  const auto x = random_tensor({1, 32, 32}, 12, 1.0, true);
  const auto y = m.predict(x);
  const auto ys = m.predict(roll(roll(x, 1, 3), 2, -7));
  CHECK(rel_err(ys, roll(roll(y, 1, 3), 2, -7)) <= 1e-8);
}

TEST_CASE("native grid inversion") {
  ConoModel m(small_2d());
  m.set_native_grid({16, 16});
  const auto x = random_tensor({1, 16, 16}, 13, 1.0, true);
  const auto y = m.predict(x);
  const auto up = real_part(resample_field(x, {32, 32}));
  const auto y_up = m.predict(up);
  CHECK(y_up.shape() == Shape{1, 32, 32});
  CHECK(y_up.max_abs_imag() == 0.0);
  CHECK(rel_err(real_part(resample_field(y_up, {16, 16})), y) < 1e-10);
  CHECK_NOTHROW(m.predict(random_tensor({1, 20, 20}, 14, 1.0, true)));
}

TEST_CASE("checkpoint round trip and corruption") {
  ConoModel m(small_2d());
  m.set_normalization({{0.5}, {2.0}, {-1.0}, {3.0}});
  m.set_native_grid({16, 16});
  m.params().get("block0.k.alpha").value[0] = 0.987654321;
  const auto path = temp_path("ckpt.bin");
  save_checkpoint(m, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded->config() == m.config());
  CHECK(loaded->normalization() == m.normalization());
  CHECK(loaded->native_grid() == m.native_grid());
  const auto x = random_tensor({1, 16, 16}, 15, 1.0, true);
  CHECK(loaded->predict(x).identical(m.predict(x)));
  const auto path2 = temp_path("ckpt2.bin");
  save_checkpoint(*loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(f1), {}) == std::string(std::istreambuf_iterator<char>(f2), {}));

  SUBCASE("truncated") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 9);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  SUBCASE("mismatched config") {
    ConoConfig other = small_2d();
    other.width = 4;
    ConoModel wrong(other);
    CHECK_THROWS_AS(load_checkpoint_into(wrong, path), FormatError);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

}
