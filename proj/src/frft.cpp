#include "cono/frft.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>

#include "cono/errors.hpp"
#include "detail/eigen_maps.hpp"

namespace cono::frft {

namespace {

// Orthonormal bases of the even (x[j] = x[-j mod n]) and odd subspaces.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> parity_bases(std::size_t n) {
  const std::size_t half = (n + 1) / 2;  // pairs (j, n-j) for 1 <= j < half
  const std::size_t n_even = n / 2 + 1;
  const std::size_t n_odd = n - n_even;
  Eigen::MatrixXd even = Eigen::MatrixXd::Zero(n, n_even);
  Eigen::MatrixXd odd = Eigen::MatrixXd::Zero(n, n_odd);
  const double r = (1.0 / std::numbers::sqrt2);
  even(0, 0) = 1.0;
  for (std::size_t j = 1; j < half; ++j) {
    even(j, j) = r;
    even(n - j, j) = r;
    odd(j, j - 1) = r;
    odd(n - j, j - 1) = -r;
  }
  if (n % 2 == 0) even(n / 2, n_even - 1) = 1.0;
  return {even, odd};
}

// Eigenvectors of the commutor restricted to one parity block, ordered by
// decreasing eigenvalue.
Eigen::MatrixXd sorted_block_eigvecs(const Eigen::MatrixXd& commutor, const Eigen::MatrixXd& basis) {
  if (basis.cols() == 0) return Eigen::MatrixXd(commutor.rows(), 0);
  const Eigen::MatrixXd reduced = basis.transpose() * commutor * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(reduced);
  if (solver.info() != Eigen::Success) throw NumericalError("frft: eigendecomposition failed");
  const Eigen::MatrixXd vecs = basis * solver.eigenvectors();
  return vecs.rowwise().reverse();
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double tol = 1e-8 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > tol) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

}  // namespace

Plan::Plan(std::size_t n) : n_(n) {
  if (n < 4) throw ShapeError("frft plan needs n >= 4, got " + std::to_string(n));
  const auto ni = static_cast<Eigen::Index>(n);

  // Commutes with the origin-0 DFT: circulant second difference plus 2cos(2 pi j / n) on the diagonal.
  Eigen::MatrixXd commutor = Eigen::MatrixXd::Zero(ni, ni);
  for (Eigen::Index j = 0; j < ni; ++j) {
    commutor(j, j) = 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)) - 4.0;
    commutor(j, (j + 1) % ni) += 1.0;
    commutor(j, (j + ni - 1) % ni) += 1.0;
  }

  const auto [even_basis, odd_basis] = parity_bases(n);
  const Eigen::MatrixXd even = sorted_block_eigvecs(commutor, even_basis);
  const Eigen::MatrixXd odd = sorted_block_eigvecs(commutor, odd_basis);

  // Even vectors take Hermite indices 0, 2, 4, ...; odd ones 1, 3, 5, .... For
  // even n the index n-1 has no eigenvector and the last even vector takes n.
  std::vector<std::pair<int, Eigen::VectorXd>> columns;
  for (Eigen::Index c = 0; c < even.cols(); ++c) {
    int k = static_cast<int>(2 * c);
    if (n % 2 == 0 && c == even.cols() - 1) k = static_cast<int>(n);
    columns.emplace_back(k, even.col(c));
  }
  for (Eigen::Index c = 0; c < odd.cols(); ++c) columns.emplace_back(static_cast<int>(2 * c + 1), odd.col(c));
  std::sort(columns.begin(), columns.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Store in centred coordinates: row j holds the origin-0 entry (j - n/2) mod n.
  const std::size_t centre = n / 2;
  eigvecs_.assign(n * n, 0.0);
  hermite_.resize(n);
  for (std::size_t col = 0; col < n; ++col) {
    Eigen::VectorXd v = columns[col].second;
    hermite_[col] = columns[col].first;
    Eigen::VectorXd centred(ni);
    for (std::size_t j = 0; j < n; ++j) centred(static_cast<Eigen::Index>(j)) = v(static_cast<Eigen::Index>((j + n - centre) % n));
    fix_sign(centred);
    for (std::size_t j = 0; j < n; ++j) eigvecs_[j * n + col] = centred(static_cast<Eigen::Index>(j));
  }
}

Plan::Plan(std::size_t n, std::vector<double> eigvecs, std::vector<int> hermite_index)
    : n_(n), eigvecs_(std::move(eigvecs)), hermite_(std::move(hermite_index)) {
  if (eigvecs_.size() != n * n || hermite_.size() != n) throw FormatError("frft plan: inconsistent sizes");
}

std::vector<cplx> Plan::eigenvalues(double alpha) const {
  std::vector<cplx> d(n_);
  for (std::size_t k = 0; k < n_; ++k)
    d[k] = std::polar(1.0, -std::numbers::pi * hermite_[k] * alpha / 2.0);
  return d;
}

std::vector<cplx> Plan::eigenvalue_derivatives(double alpha) const {
  std::vector<cplx> d = eigenvalues(alpha);
  for (std::size_t k = 0; k < n_; ++k) d[k] *= cplx(0.0, -std::numbers::pi * hermite_[k] / 2.0);
  return d;
}

ComplexTensor Plan::rows_with(std::span<const cplx> diag, std::size_t row_begin, std::size_t rows) const {
  if (row_begin + rows > n_) throw ShapeError("frft plan: row range out of bounds");
  ComplexTensor m({rows, n_});
  const auto ni = static_cast<Eigen::Index>(n_);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> v(
      eigvecs_.data(), ni, ni);
  detail::RowMat scaled(static_cast<Eigen::Index>(rows), ni);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n_; ++c) scaled(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = eigvec(row_begin + r, c) * diag[c];
  detail::MatMap(m.raw(), static_cast<Eigen::Index>(rows), ni).noalias() =
      scaled * v.transpose().cast<cplx>();
  return m;
}

ComplexTensor Plan::matrix_rows(double alpha, std::size_t row_begin, std::size_t rows) const {
  return rows_with(eigenvalues(alpha), row_begin, rows);
}

ComplexTensor Plan::matrix_rows_dalpha(double alpha, std::size_t row_begin, std::size_t rows) const {
  return rows_with(eigenvalue_derivatives(alpha), row_begin, rows);
}

namespace {

std::filesystem::path cache_file(std::size_t n) {
  const char* dir = std::getenv("CONO_CACHE_DIR");
  if (!dir || !*dir) return {};
  return std::filesystem::path(dir) / ("frft_" + std::to_string(n) + ".plan");
}

constexpr char kPlanMagic[4] = {'F', 'R', 'P', 'L'};
constexpr std::uint32_t kPlanVersion = 1;

std::shared_ptr<const Plan> load_cached(std::size_t n) {
  const auto path = cache_file(n);
  if (path.empty()) return nullptr;
  std::ifstream in(path, std::ios::binary);
  if (!in) return nullptr;
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t stored_n = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&stored_n), sizeof stored_n);
  if (!in || !std::equal(magic, magic + 4, kPlanMagic) || version != kPlanVersion || stored_n != n) return nullptr;
  std::vector<double> vecs(n * n);
  std::vector<std::int32_t> k(n);
  in.read(reinterpret_cast<char*>(vecs.data()), static_cast<std::streamsize>(vecs.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(k.data()), static_cast<std::streamsize>(k.size() * sizeof(std::int32_t)));
  if (!in) return nullptr;
  return std::make_shared<const Plan>(n, std::move(vecs), std::vector<int>(k.begin(), k.end()));
}

void store_cached(const Plan& plan) {
  const auto path = cache_file(plan.n());
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    const std::uint64_t n = plan.n();
    out.write(kPlanMagic, 4);
    out.write(reinterpret_cast<const char*>(&kPlanVersion), sizeof kPlanVersion);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(plan.eigvecs().data()),
              static_cast<std::streamsize>(plan.eigvecs().size() * sizeof(double)));
    for (int k : plan.hermite_index()) {
      const auto k32 = static_cast<std::int32_t>(k);
      out.write(reinterpret_cast<const char*>(&k32), sizeof k32);
    }
  }
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

std::shared_ptr<const Plan> build_plan(std::size_t n) {
  static std::shared_mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const Plan>> cache;
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  std::shared_ptr<const Plan> plan = load_cached(n);
  if (!plan) {
    plan = std::make_shared<const Plan>(n);
    store_cached(*plan);
  }
  std::unique_lock lock(mutex);
  return cache.emplace(n, std::move(plan)).first->second;
}

namespace {

ComplexTensor eigvec_tensor(const Plan& plan, bool transpose) {
  const std::size_t n = plan.n();
  ComplexTensor m({n, n});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      m[r * n + c] = transpose ? plan.eigvec(c, r) : plan.eigvec(r, c);
  return m;
}

void check_extent(const Plan& plan, const ComplexTensor& x, std::size_t dim) {
  if (x.extent(dim) != plan.n())
    throw ShapeError("frft: extent " + std::to_string(x.extent(dim)) + " along dim " + std::to_string(dim) +
                     " does not match plan size " + std::to_string(plan.n()));
}

}  // namespace

ComplexTensor apply(const Plan& plan, const ComplexTensor& x, std::size_t dim, double alpha) {
  check_extent(plan, x, dim);
  const ComplexTensor coeffs = apply_along(eigvec_tensor(plan, true), x, dim);
  const std::vector<cplx> d = plan.eigenvalues(alpha);
  return apply_along(eigvec_tensor(plan, false), scale_along(d, coeffs, dim), dim);
}

ApplyWithGrad apply_grad_alpha(const Plan& plan, const ComplexTensor& x, std::size_t dim, double alpha) {
  check_extent(plan, x, dim);
  const ComplexTensor coeffs = apply_along(eigvec_tensor(plan, true), x, dim);
  const ComplexTensor v = eigvec_tensor(plan, false);
  return {apply_along(v, scale_along(plan.eigenvalues(alpha), coeffs, dim), dim),
          apply_along(v, scale_along(plan.eigenvalue_derivatives(alpha), coeffs, dim), dim)};
}

ComplexTensor apply_nd(std::span<const Plan* const> plans, const ComplexTensor& x,
                       std::span<const double> alphas, bool inverse) {
  const std::size_t dims = x.rank() - 1;
  if (plans.size() != dims || alphas.size() != dims)
    throw ShapeError("frft_nd: need one plan and one order per spatial dim of " + shape_str(x.shape()));
  ComplexTensor y = x;
  for (std::size_t i = 0; i < dims; ++i) {
    const std::size_t d = inverse ? dims - 1 - i : i;
    y = apply(*plans[d], y, d + 1, inverse ? -alphas[d] : alphas[d]);
  }
  return y;
}

double reduce_order(double alpha) noexcept {
  const double r = std::fmod(alpha, 4.0);
  return r < 0 ? r + 4.0 : r;
}

}  // namespace cono::frft
