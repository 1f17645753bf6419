#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace esn {

using Index = Eigen::Index;

/// Dense dynamic-size matrix/vector aliases templated on scalar.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matd = Mat<double>;
using Vecd = Vec<double>;

/// Row-major sparse matrix, the storage of choice for reservoir weights.
using SparseMatd = Eigen::SparseMatrix<double, Eigen::RowMajor>;

}  // namespace esn
