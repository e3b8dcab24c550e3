#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "sketchavg/error.hpp"
#include "sketchavg/rng.hpp"
#include "sketchavg/types.hpp"

namespace sketchavg {

/// Outcome flags from solves that may take a fallback path.
struct SolveDiagnostics {
  bool indefinite = false;
  std::string warning;
};

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
  DenseMatrix<Scalar> out = a * b;
  return out;
}

namespace detail {

/// Index of the first non-positive pivot met by an unpivoted Cholesky sweep,
/// or -1 if the factorization completes.
template <typename Derived>
Index failing_cholesky_pivot(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Index n = m.rows();
  DenseMatrix<Scalar> l = DenseMatrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    Scalar diag = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > Scalar(0))) return j;
    l(j, j) = std::sqrt(diag);
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return -1;
}

template <typename DerivedM, typename DerivedG>
void check_square_system(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedG>& g,
                         const char* who) {
  if (m.rows() != m.cols() || m.rows() != g.rows()) {
    throw ShapeError(std::string(who) + ": expected square matrix matching rhs length, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " and " +
                     std::to_string(g.rows()));
  }
}

}  // namespace detail

/// Solves M x = g for symmetric positive definite M by Cholesky factorization.
/// Throws NotPositiveDefinite carrying the first failing pivot.
template <typename DerivedM, typename DerivedG>
DenseVector<typename DerivedM::Scalar> solve_spd(const Eigen::MatrixBase<DerivedM>& m,
                                                 const Eigen::MatrixBase<DerivedG>& g) {
  detail::check_square_system(m, g, "solve_spd");
  using Scalar = typename DerivedM::Scalar;
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(m);
  if (llt.info() != Eigen::Success) {
    const Index pivot = detail::failing_cholesky_pivot(m);
    throw NotPositiveDefinite(static_cast<std::size_t>(pivot < 0 ? 0 : pivot));
  }
  return llt.solve(g);
}

/// Symmetric solve that tries Cholesky first and falls back to a symmetric
/// eigendecomposition when M is indefinite. The fallback is reported through
/// `diag`. Throws NotPositiveDefinite if M is numerically singular.
template <typename DerivedM, typename DerivedG>
DenseVector<typename DerivedM::Scalar> solve_symmetric(const Eigen::MatrixBase<DerivedM>& m,
                                                       const Eigen::MatrixBase<DerivedG>& g,
                                                       SolveDiagnostics* diag = nullptr) {
  detail::check_square_system(m, g, "solve_symmetric");
  using Scalar = typename DerivedM::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::LLT<Dense> llt(m);
  if (llt.info() == Eigen::Success) return llt.solve(g);

  Eigen::SelfAdjointEigenSolver<Dense> eig(m);
  const auto& w = eig.eigenvalues();
  const Scalar scale = w.cwiseAbs().maxCoeff();
  for (Index i = 0; i < w.size(); ++i) {
    if (std::abs(w(i)) <= scale * Scalar(1e-14)) {
      throw NotPositiveDefinite(static_cast<std::size_t>(i));
    }
  }
  if (diag) {
    diag->indefinite = true;
    diag->warning = "indefinite system (min eigenvalue " + std::to_string(double(w.minCoeff())) +
                    "); solved by symmetric eigendecomposition";
  }
  DenseVector<Scalar> coeffs = eig.eigenvectors().transpose() * g;
  return eig.eigenvectors() * coeffs.cwiseQuotient(w);
}

/// Singular values in descending order, length min(rows, cols).
///
/// Tall inputs (rows >= 2 cols) go through the eigenvalues of the cols x cols
/// Gram matrix; everything else uses a one-sided Jacobi SVD.
template <typename Derived>
DenseVector<typename Derived::Scalar> singular_values(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!a.allFinite()) throw ShapeError("singular_values: non-finite input");
  DenseVector<Scalar> sv;
  if (a.rows() >= 2 * a.cols()) {
    Dense gram = Dense::Zero(a.cols(), a.cols());
    gram.template selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    Eigen::SelfAdjointEigenSolver<Dense> eig(gram, Eigen::EigenvaluesOnly);
    sv = eig.eigenvalues().reverse().cwiseMax(Scalar(0)).cwiseSqrt();
  } else {
    Eigen::JacobiSVD<Dense> svd(a);
    sv = svd.singularValues();
  }
  return sv;
}

/// n x d matrix with orthonormal columns from the thin QR of a Gaussian draw.
template <typename Scalar = double>
DenseMatrix<Scalar> random_orthonormal(Index n, Index d, RngStream& rng) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = Scalar(rng.normal());
  Eigen::HouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(g);
  DenseMatrix<Scalar> q = qr.householderQ() * Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, d);
  return q;
}

/// sigma * Q1 * Q2^T with Q1 (n x d) and Q2 (d x d) orthonormal: every
/// singular value equals sigma.
template <typename Scalar = double>
DenseMatrix<Scalar> make_identical_singular_matrix(Index n, Index d, Scalar sigma, RngStream& rng) {
  if (d < 1 || n < d) {
    throw ShapeError("make_identical_singular_matrix: need n >= d >= 1, got n=" +
                     std::to_string(n) + " d=" + std::to_string(d));
  }
  if (!(sigma > Scalar(0))) throw ShapeError("make_identical_singular_matrix: sigma must be positive");
  const DenseMatrix<Scalar> left = random_orthonormal<Scalar>(n, d, rng);
  const DenseMatrix<Scalar> right = random_orthonormal<Scalar>(d, d, rng);
  DenseMatrix<Scalar> a = sigma * (left * right.transpose());
  return a;
}

}  // namespace sketchavg
