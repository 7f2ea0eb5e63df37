#pragma once

#include <Eigen/Core>
#include <complex>

namespace cono::detail {

using RowMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

}  // namespace cono::detail
