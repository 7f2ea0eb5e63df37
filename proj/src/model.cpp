#include "cono/model.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "cono/errors.hpp"
#include "cono/ops.hpp"

namespace cono {

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::vanilla: return "vanilla";
    case Ablation::fourier: return "fourier";
    case Ablation::no_alias: return "no_alias";
    case Ablation::no_bias: return "no_bias";
  }
  return "full";
}

Ablation parse_ablation(const std::string& s) {
  for (Ablation a : {Ablation::full, Ablation::vanilla, Ablation::fourier, Ablation::no_alias, Ablation::no_bias})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown ablation '" + s + "' (full, vanilla, fourier, no_alias, no_bias)");
}

namespace {

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || v[0] == '-') throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

ResampleFilter ConoConfig::filter() const {
  return filter_taps == 0 ? ResampleFilter::ideal() : ResampleFilter::kaiser(filter_taps, filter_beta);
}

void ConoConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("invalid model config: " + m); };
  if (in_channels == 0) fail("in_channels must be positive");
  if (out_channels == 0) fail("out_channels must be positive");
  if (lift_dim < in_channels) fail("lift_dim must be >= in_channels");
  if (width == 0) fail("width must be positive");
  if (n_blocks == 0) fail("blocks must be positive");
  if (modes.empty() || modes.size() > 2) fail("modes needs one entry per spatial dim (1 or 2)");
  for (std::size_t m : modes)
    if (m == 0) fail("modes must be positive");
  if (alpha_init.size() != modes.size()) fail("alpha_init needs one entry per spatial dim");
  for (double a : alpha_init)
    if (!std::isfinite(a)) fail("alpha_init must be finite");
  if (unet_levels > 5) fail("unet_levels must be <= 5");
  if (!(filter_beta >= 0.0)) fail("filter_beta must be >= 0");
}

std::string ConoConfig::to_text() const {
  std::ostringstream o;
  auto sz = [](std::size_t v) { return std::to_string(v); };
  o << "in_channels = " << in_channels << "\n"
    << "out_channels = " << out_channels << "\n"
    << "lift_dim = " << lift_dim << "\n"
    << "width = " << width << "\n"
    << "blocks = " << n_blocks << "\n"
    << "modes = " << join(modes, sz) << "\n"
    << "unet_levels = " << unet_levels << "\n"
    << "alpha_init = " << join(alpha_init, hexfloat) << "\n"
    << "ablation = " << to_string(ablation) << "\n"
    << "seed = " << seed << "\n"
    << "filter_taps = " << filter_taps << "\n"
    << "filter_beta = " << hexfloat(filter_beta) << "\n";
  return o.str();
}

ConoConfig ConoConfig::from_map(const std::map<std::string, std::string>& kv, ConoConfig c) {
  for (const auto& [key, value] : kv) {
    if (key == "in_channels") c.in_channels = parse_size(key, value);
    else if (key == "out_channels") c.out_channels = parse_size(key, value);
    else if (key == "lift_dim") c.lift_dim = parse_size(key, value);
    else if (key == "width") c.width = parse_size(key, value);
    else if (key == "blocks") c.n_blocks = parse_size(key, value);
    else if (key == "modes") {
      c.modes.clear();
      for (const auto& s : split_list(value)) c.modes.push_back(parse_size(key, s));
    } else if (key == "unet_levels") c.unet_levels = parse_size(key, value);
    else if (key == "alpha_init") {
      c.alpha_init.clear();
      for (const auto& s : split_list(value)) c.alpha_init.push_back(parse_real(key, s));
    } else if (key == "ablation") c.ablation = parse_ablation(value);
    else if (key == "seed") c.seed = parse_size(key, value);
    else if (key == "filter_taps") c.filter_taps = parse_size(key, value);
    else if (key == "filter_beta") c.filter_beta = parse_real(key, value);
    else throw std::invalid_argument("unknown model config key '" + key + "'");
  }
  return c;
}

ConoConfig ConoConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw FormatError("model config: malformed line '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return from_map(kv);
}

std::string ConoConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_text()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

ConoModel::ConoModel(ConoConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  const std::size_t dims = c.spatial_dims();
  const std::uint64_t seed = c.seed;
  const Activation act = c.ablation == Ablation::no_alias ? Activation::pointwise : Activation::alias_free;
  const bool pinned = c.ablation == Ablation::vanilla || c.ablation == Ablation::fourier;

  p_in_ = ComplexConv::create(store_, "p.0", c.in_channels, c.lift_dim, 1, dims, seed, true);
  p_hidden_ = ComplexConv::create(store_, "p.1", c.lift_dim, c.lift_dim, 1, dims, seed, true);
  q_conv_ = ComplexConv::create(store_, "q.conv", c.lift_dim, c.width, 3, dims, seed, true);
  q_has_skip_ = c.lift_dim != c.width;
  if (q_has_skip_) q_skip_ = ComplexConv::create(store_, "q.skip", c.lift_dim, c.width, 1, dims, seed, true);
  r_ = ComplexConv::create(store_, "r", c.width, c.width, 1, dims, seed);

  const std::size_t n_blocks = c.ablation == Ablation::vanilla ? 1 : c.n_blocks;
  const std::vector<double> alpha = pinned ? std::vector<double>(dims, 1.0) : c.alpha_init;
  const bool use_w = c.ablation != Ablation::no_bias;
  const bool use_unet = c.ablation != Ablation::no_bias && c.ablation != Ablation::vanilla;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    blocks_.push_back(SpectralBlock::create(store_, "block" + std::to_string(b), c.width, c.modes, alpha,
                                            c.unet_levels, use_w, use_unet, seed, act, c.filter()));
    blocks_.back().alpha->frozen = pinned;
  }

  r_out_ = ComplexConv::create(store_, "r_out", c.width, c.width, 1, dims, seed);
  q_out_conv_ = ComplexConv::create(store_, "q_out.conv", c.width, c.width, 3, dims, seed);
  p_out_hidden_ = ComplexConv::create(store_, "p_out.0", c.width, c.lift_dim, 1, dims, seed, true);
  p_out_ = ComplexConv::create(store_, "p_out.1", c.lift_dim, c.out_channels, 1, dims, seed, true);
}

std::vector<ad::Parameter*> ConoModel::trainable() {
  std::vector<ad::Parameter*> out;
  for (auto* p : store_.all())
    if (!p->frozen) out.push_back(p);
  return out;
}

std::vector<std::vector<double>> ConoModel::alphas() const {
  std::vector<std::vector<double>> out;
  for (const auto& b : blocks_) {
    std::vector<double> a;
    for (const auto& z : b.alpha->value.data()) a.push_back(z.real());
    out.push_back(std::move(a));
  }
  return out;
}

void ConoModel::set_normalization(Normalization n) {
  if (!n.empty()) {
    if (n.in_shift.size() != config_.in_channels || n.in_scale.size() != config_.in_channels ||
        n.out_shift.size() != config_.out_channels || n.out_scale.size() != config_.out_channels)
      throw ShapeError("normalization does not match the model channels");
    for (double s : n.in_scale)
      if (!(s > 0.0)) throw std::invalid_argument("normalization scales must be positive");
    for (double s : n.out_scale)
      if (!(s > 0.0)) throw std::invalid_argument("normalization scales must be positive");
  }
  norm_ = std::move(n);
}

void ConoModel::set_native_grid(std::vector<std::size_t> grid) {
  if (!grid.empty() && grid.size() != config_.spatial_dims())
    throw ShapeError("native grid needs one extent per spatial dim");
  native_ = std::move(grid);
}

ad::Var ConoModel::network(ad::Tape& tape, ad::Var x) const {
  ad::Var v = p_hidden_(tape, ad::cgelu(p_in_(tape, x)));
  ad::Var skip = q_has_skip_ ? q_skip_(tape, v) : v;
  v = ad::add(skip, ad::cgelu(q_conv_(tape, v)));
  v = r_(tape, v);
  for (const auto& b : blocks_) v = b(tape, v);
  v = r_out_(tape, v);
  const Activation act = config_.ablation == Ablation::no_alias ? Activation::pointwise : Activation::alias_free;
  v = ad::add(v, ad::activate(q_out_conv_(tape, v), act, config_.filter()));
  v = ad::real(v);
  return ad::real(p_out_(tape, ad::cgelu(p_out_hidden_(tape, v))));
}

namespace {

ComplexTensor channel_affine(const ComplexTensor& x, const std::vector<double>& scale, const std::vector<double>& shift) {
  ComplexTensor y = x;
  const std::size_t points = x.size() / x.extent(0);
  for (std::size_t c = 0; c < x.extent(0); ++c)
    for (std::size_t p = 0; p < points; ++p) y[c * points + p] = y[c * points + p] * scale[c] + shift[c];
  return y;
}

}  // namespace

ad::Var ConoModel::forward(ad::Tape& tape, const ComplexTensor& input) const {
  const std::size_t dims = config_.spatial_dims();
  if (input.rank() != dims + 1 || input.extent(0) != config_.in_channels)
    throw ShapeError("model expects input [" + std::to_string(config_.in_channels) + ", " + std::to_string(dims) +
                     " spatial dims], got " + shape_str(input.shape()));
  if (!input.is_real()) throw std::invalid_argument("model input must have zero imaginary parts");
  ComplexTensor x = input;
  if (!norm_.empty()) {
    std::vector<double> inv(norm_.in_scale.size()), neg(norm_.in_shift.size());
    for (std::size_t c = 0; c < inv.size(); ++c) {
      inv[c] = 1.0 / norm_.in_scale[c];
      neg[c] = -norm_.in_shift[c] * inv[c];
    }
    x = channel_affine(x, inv, neg);
  }
  const std::vector<std::size_t> grid = spatial_extents(input);
  const bool resample = !native_.empty() && grid != native_;
  if (resample) x = real_part(resample_field(x, native_));

  ad::Var y = network(tape, tape.constant(std::move(x)));
  if (!norm_.empty()) {
    const auto scale = norm_.out_scale, shift = norm_.out_shift;
    y = tape.record("channel_affine", {y}, channel_affine(y.value(), scale, shift),
                    [scale](const ComplexTensor& g, std::span<const bool>) {
                      return std::vector<ComplexTensor>{channel_affine(g, scale, std::vector<double>(scale.size(), 0.0))};
                    });
  }
  if (resample) y = ad::real(ad::resample_field(y, grid));
  return y;
}

ComplexTensor ConoModel::predict(const ComplexTensor& input) const {
  ad::Tape tape;
  return forward(tape, input).value();
}

}  // namespace cono
