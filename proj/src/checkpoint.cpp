#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cono/errors.hpp"
#include "cono/model.hpp"
#include "detail/binio.hpp"

namespace cono {

namespace {

using detail::Reader;
using detail::Writer;

constexpr char kMagic[4] = {'C', 'O', 'N', 'O'};
constexpr std::uint32_t kVersion = 1;

struct Header {
  ConoConfig config;
  Normalization norm;
  std::vector<std::size_t> native;
};

Header read_header(Reader& r, const std::string& path) {
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path + ": not a model checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  Header h;
  try {
    h.config = ConoConfig::from_text(r.str());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path + ": bad config block: " + e.what());
  }
  h.norm.in_shift = r.reals();
  h.norm.in_scale = r.reals();
  h.norm.out_shift = r.reals();
  h.norm.out_scale = r.reals();
  const auto dims = r.get<std::uint32_t>();
  if (dims > 3) throw FormatError(path + ": corrupt native grid");
  for (std::uint32_t d = 0; d < dims; ++d) h.native.push_back(r.get<std::uint64_t>());
  return h;
}

void read_params(Reader& r, ConoModel& model, const std::string& path) {
  const auto count = r.get<std::uint32_t>();
  if (count != model.params().count())
    throw FormatError(path + ": checkpoint has " + std::to_string(count) + " parameters, model has " +
                      std::to_string(model.params().count()));
  for (auto* p : model.params().all()) {
    const std::string name = r.str(4096);
    if (name != p->name) throw FormatError(path + ": expected parameter '" + p->name + "', found '" + name + "'");
    const auto flags = r.get<std::uint8_t>();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError(path + ": corrupt rank for '" + name + "'");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.get<std::uint64_t>());
    if (shape != p->value.shape())
      throw FormatError(path + ": parameter '" + name + "' has shape " + shape_str(shape) + ", model expects " +
                        shape_str(p->value.shape()));
    ComplexTensor value(shape);
    for (auto& z : value.data()) {
      const double re = r.get<double>();
      const double im = r.get<double>();
      z = cplx(re, im);
    }
    p->value = std::move(value);
    p->real_constrained = (flags & 1) != 0;
    p->frozen = (flags & 2) != 0;
    p->zero_grad();
  }
}

}  // namespace

void save_checkpoint(const ConoModel& model, const std::filesystem::path& path) {
  std::ostringstream buf;
  Writer w(buf);
  buf.write(kMagic, 4);
  w.put(kVersion);
  w.str(model.config().to_text());
  const auto& n = model.normalization();
  w.reals(n.in_shift);
  w.reals(n.in_scale);
  w.reals(n.out_shift);
  w.reals(n.out_scale);
  w.put(static_cast<std::uint32_t>(model.native_grid().size()));
  for (std::size_t e : model.native_grid()) w.put(static_cast<std::uint64_t>(e));
  const auto params = model.params().all();
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.str(p->name);
    w.put(static_cast<std::uint8_t>((p->real_constrained ? 1 : 0) | (p->frozen ? 2 : 0)));
    w.put(static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t e : p->value.shape()) w.put(static_cast<std::uint64_t>(e));
    for (const auto& z : p->value.data()) {
      w.put(z.real());
      w.put(z.imag());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

std::unique_ptr<ConoModel> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  Header h = read_header(r, path.string());
  auto model = std::make_unique<ConoModel>(h.config);
  try {
    model->set_normalization(h.norm);
    model->set_native_grid(h.native);
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  read_params(r, *model, path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes after parameters");
  return model;
}

void load_checkpoint_into(ConoModel& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  Header h = read_header(r, path.string());
  if (!(h.config == model.config()))
    throw FormatError(path.string() + ": checkpoint config (hash " + h.config.hash() + ") does not match model (hash " +
                      model.config().hash() + ")");
  read_params(r, model, path.string());
  model.set_normalization(h.norm);
  model.set_native_grid(h.native);
}

}  // namespace cono
