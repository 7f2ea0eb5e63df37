#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cono/errors.hpp"

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

namespace cono::detail {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void reals(const std::vector<double>& v) {
    put(static_cast<std::uint32_t>(v.size()));
    for (double d : v) put(d);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw FormatError(what_ + ": truncated or corrupt file");
    return v;
  }
  std::string str(std::size_t limit = 1 << 20) {
    const auto n = get<std::uint32_t>();
    if (n > limit) throw FormatError(what_ + ": corrupt string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw FormatError(what_ + ": truncated or corrupt file");
    return s;
  }
  std::vector<double> reals() {
    const auto n = get<std::uint32_t>();
    if (n > 1 << 20) throw FormatError(what_ + ": corrupt vector length");
    std::vector<double> v(n);
    for (auto& d : v) d = get<double>();
    return v;
  }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace cono::detail
