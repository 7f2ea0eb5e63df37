#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "cono/errors.hpp"
#include "cono/pdedata.hpp"
#include "cono/resample.hpp"

namespace cono {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr first;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n || first) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

void GridDataset::validate() const {
  grid.validate();
  Shape in{in_channels}, out{out_channels};
  for (auto s : grid.sizes) {
    in.push_back(s);
    out.push_back(s);
  }
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].input.shape() != in || samples[j].output.shape() != out)
      throw ShapeError("dataset sample " + std::to_string(j) + " has shapes " + shape_str(samples[j].input.shape()) +
                       " -> " + shape_str(samples[j].output.shape()) + ", expected " + shape_str(in) + " -> " +
                       shape_str(out));
  }
}

double GridDataset::input_variance() const {
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples)
    for (const auto& z : s.input.data()) {
      sum += z.real();
      ++count;
    }
  if (count == 0) return 0.0;
  const double mean = sum / static_cast<double>(count);
  for (const auto& s : samples)
    for (const auto& z : s.input.data()) sq += (z.real() - mean) * (z.real() - mean);
  return sq / static_cast<double>(count);
}

bool GridDataset::operator==(const GridDataset& other) const {
  if (!(grid == other.grid) || in_channels != other.in_channels || out_channels != other.out_channels ||
      meta != other.meta || samples.size() != other.samples.size())
    return false;
  for (std::size_t j = 0; j < samples.size(); ++j)
    if (!samples[j].input.identical(other.samples[j].input) || !samples[j].output.identical(other.samples[j].output))
      return false;
  return true;
}

GridDataset add_noise(const GridDataset& ds, double gamma, std::uint64_t seed) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("add_noise: gamma must be >= 0");
  if (gamma == 0.0) return ds;
  GridDataset out = ds;
  const double sd = gamma * std::sqrt(ds.input_variance());
  std::mt19937_64 rng(sample_seed(seed, 0x6e6f697365ull));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& s : out.samples)
    for (auto& z : s.input.data()) z = cplx(z.real() + sd * normal(rng), 0.0);
  out.meta["noise_gamma"] = format_double(gamma);
  out.meta["noise_seed"] = std::to_string(seed);
  return out;
}

namespace {

GridDataset subset(const GridDataset& ds, const std::vector<std::size_t>& idx) {
  GridDataset out;
  out.grid = ds.grid;
  out.in_channels = ds.in_channels;
  out.out_channels = ds.out_channels;
  out.meta = ds.meta;
  out.samples.reserve(idx.size());
  for (auto i : idx) out.samples.push_back(ds.samples[i]);
  return out;
}

}  // namespace

std::tuple<GridDataset, GridDataset, GridDataset> split(const GridDataset& ds, std::vector<double> ratios,
                                                         std::uint64_t seed) {
  if (ratios.size() != 3) throw std::invalid_argument("split: need three ratios");
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || *std::min_element(ratios.begin(), ratios.end()) < 0.0)
    throw std::invalid_argument("split: ratios must be non-negative and sum to 1");
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw std::invalid_argument("split: " + std::to_string(n) + " samples leave an empty part");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(sample_seed(seed, 0x73706c6974ull));
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::size_t> a(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> b(order.begin() + n_train, order.begin() + n_train + n_val);
  std::vector<std::size_t> c(order.begin() + n_train + n_val, order.end());
  return {subset(ds, a), subset(ds, b), subset(ds, c)};
}

std::tuple<GridDataset, GridDataset, GridDataset> split(const GridDataset& ds, std::uint64_t seed) {
  return split(ds, {0.8, 0.1, 0.1}, seed);
}

GridDataset take(const GridDataset& ds, std::size_t count) {
  std::vector<std::size_t> idx(std::min(count, ds.size()));
  std::iota(idx.begin(), idx.end(), 0);
  return subset(ds, idx);
}

GridDataset resample(const GridDataset& ds, std::size_t new_size) {
  if (new_size < 4) throw ShapeError("resample: new size must be >= 4");
  GridDataset out = ds;
  std::vector<std::size_t> extents(ds.grid.spatial_dims(), new_size);
  if (extents == ds.grid.sizes) return out;
  out.grid.sizes = extents;
  for (auto& s : out.samples) {
    s.input = real_part(resample_field(s.input, extents));
    s.output = real_part(resample_field(s.output, extents));
  }
  out.meta["target"] = "resampled";
  return out;
}

GridDataset subsample(const GridDataset& ds, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("subsample: factor must be positive");
  GridDataset out = ds;
  if (factor == 1) return out;
  for (auto s : ds.grid.sizes)
    if (s % factor != 0 || s / factor < 4) throw ShapeError("subsample: extent " + std::to_string(s) + " not divisible");
  for (auto& s : out.grid.sizes) s /= factor;
  const bool two_d = ds.grid.spatial_dims() == 2;
  auto pick = [&](const ComplexTensor& x) {
    Shape shape{x.extent(0)};
    for (auto s : out.grid.sizes) shape.push_back(s);
    ComplexTensor y(shape);
    const std::size_t nx = ds.grid.sizes.back(), ny = two_d ? ds.grid.sizes[0] : 1;
    const std::size_t mx = nx / factor, my = two_d ? ny / factor : 1;
    for (std::size_t c = 0; c < x.extent(0); ++c)
      for (std::size_t i = 0; i < my; ++i)
        for (std::size_t j = 0; j < mx; ++j) y[(c * my + i) * mx + j] = x[(c * ny + i * factor) * nx + j * factor];
    return y;
  };
  for (auto& s : out.samples) {
    s.input = pick(s.input);
    s.output = pick(s.output);
  }
  out.meta["target"] = "native-subsampled";
  return out;
}

std::string encode_meta(const std::map<std::string, std::string>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("metadata key/value not encodable: " + k);
    out += k + "=" + v + "\n";
  }
  return out;
}

std::map<std::string, std::string> decode_meta(const std::string& text) {
  std::map<std::string, std::string> meta;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("metadata line without '=': " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

}  // namespace cono
