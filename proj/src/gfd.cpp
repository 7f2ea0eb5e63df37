#include <cstring>
#include <fstream>
#include <sstream>

#include "cono/errors.hpp"
#include "cono/pdedata.hpp"
#include "detail/binio.hpp"

namespace cono {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'D', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 1;

}  // namespace

void write_gfd(const GridDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ostringstream buf(std::ios::binary);
  detail::Writer w(buf);
  buf.write(kMagic, 4);
  w.put(kVersion);
  w.put(kDtypeF64);
  w.put(static_cast<std::uint8_t>(ds.grid.spatial_dims()));
  for (auto s : ds.grid.sizes) w.put(static_cast<std::uint32_t>(s));
  w.put(static_cast<std::uint32_t>(ds.size()));
  w.put(static_cast<std::uint32_t>(ds.in_channels));
  w.put(static_cast<std::uint32_t>(ds.out_channels));
  w.str(encode_meta(ds.meta));
  for (const auto& s : ds.samples)
    for (const auto& z : s.input.data()) w.put(z.real());
  for (const auto& s : ds.samples)
    for (const auto& z : s.output.data()) w.put(z.real());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

GridDataset read_gfd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  const std::string what = path.string();
  detail::Reader r(in, what);
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(what + ": not a GFD file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw FormatError(what + ": unsupported GFD version " + std::to_string(version));
  if (r.get<std::uint8_t>() != kDtypeF64) throw FormatError(what + ": unsupported dtype");
  const auto dims = r.get<std::uint8_t>();
  if (dims != 1 && dims != 2) throw FormatError(what + ": spatial dims must be 1 or 2");

  GridDataset ds;
  std::size_t points = 1;
  for (std::uint8_t d = 0; d < dims; ++d) {
    const auto s = r.get<std::uint32_t>();
    if (s < 4 || s > (1u << 16)) throw FormatError(what + ": bad grid size " + std::to_string(s));
    ds.grid.sizes.push_back(s);
    points *= s;
  }
  const auto n = r.get<std::uint32_t>();
  ds.in_channels = r.get<std::uint32_t>();
  ds.out_channels = r.get<std::uint32_t>();
  if (ds.in_channels == 0 || ds.out_channels == 0 || ds.in_channels > 4096 || ds.out_channels > 4096)
    throw FormatError(what + ": bad channel count");
  ds.meta = decode_meta(r.str());

  // Refuse to allocate more than the file can hold.
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  const std::uint64_t expected =
      8ull * static_cast<std::uint64_t>(n) * points * (ds.in_channels + ds.out_channels);
  if (remaining < expected) throw FormatError(what + ": truncated data section");
  if (remaining > expected) throw FormatError(what + ": trailing bytes after data section");

  Shape in_shape{ds.in_channels}, out_shape{ds.out_channels};
  for (auto s : ds.grid.sizes) {
    in_shape.push_back(s);
    out_shape.push_back(s);
  }
  ds.samples.resize(n);
  for (auto& s : ds.samples) {
    s.input = ComplexTensor(in_shape);
    for (auto& z : s.input.data()) z = r.get<double>();
  }
  for (auto& s : ds.samples) {
    s.output = ComplexTensor(out_shape);
    for (auto& z : s.output.data()) z = r.get<double>();
  }
  return ds;
}

}  // namespace cono
