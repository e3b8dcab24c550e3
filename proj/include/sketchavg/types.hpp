#pragma once

#include <Eigen/Dense>

namespace sketchavg {

// Dense storage is row-major throughout so that SAMX files, CSV rows and
// in-memory layout agree byte for byte.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;
using Index = Eigen::Index;

}  // namespace sketchavg
