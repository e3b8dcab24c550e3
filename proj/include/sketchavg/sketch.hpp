#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchavg/error.hpp"
#include "sketchavg/rng.hpp"
#include "sketchavg/types.hpp"

namespace sketchavg {

enum class SketchKind { gaussian, hadamard, uniform, sjlt, hybrid };

std::string_view to_string(SketchKind kind);
std::optional<SketchKind> parse_sketch_kind(std::string_view name);

/// Which sketch to draw and its sizes. `s` is used by sjlt (and by a hybrid
/// whose inner stage is sjlt); `m2` and `inner` only by hybrid.
struct SketchSpec {
  SketchKind kind = SketchKind::gaussian;
  Index m = 1;
  Index s = 1;
  Index m2 = 0;
  SketchKind inner = SketchKind::gaussian;

  bool operator==(const SketchSpec&) const = default;
};

/// Throws ShapeError if `spec` cannot be applied to an input with `n` rows.
void validate(const SketchSpec& spec, Index n);

namespace detail {

inline void require_rows(Index m, Index n, const char* who) {
  if (m < 1) throw ShapeError(std::string(who) + ": sketch size must be >= 1");
  if (m > n) {
    throw ShapeError(std::string(who) + ": sketch size m=" + std::to_string(m) +
                     " exceeds available rows n=" + std::to_string(n));
  }
}

/// First `m` entries of a uniformly random permutation of 0..n-1
/// (partial Fisher-Yates), i.e. m draws without replacement.
inline std::vector<Index> sample_without_replacement(Index n, Index m, RngStream& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < m; ++i) {
    const Index j = i + static_cast<Index>(rng.index(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(m));
  return idx;
}

/// Draws the nonzeros of an m x n SJLT column by column and hands each one to
/// `emit(column, row, value)`. Rows within a column are distinct (Floyd's
/// algorithm), values are +-1/sqrt(s).
template <typename Emit>
void for_each_sjlt_entry(Index n, Index m, Index s, RngStream& rng, Emit&& emit) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(s));
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(s));
  for (Index col = 0; col < n; ++col) {
    rows.clear();
    for (Index j = m - s; j < m; ++j) {
      const Index t = static_cast<Index>(rng.index(static_cast<std::uint64_t>(j + 1)));
      bool seen = false;
      for (Index r : rows) seen = seen || (r == t);
      rows.push_back(seen ? j : t);
    }
    for (Index r : rows) emit(col, r, rng.rademacher() * scale);
  }
}

/// In-place normalized Walsh-Hadamard transform along the rows of `w`
/// (w.rows() must be a power of two). Each column is transformed independently.
template <typename Scalar>
void fwht_rows(DenseMatrix<Scalar>& w) {
  const Index n = w.rows();
  const Index d = w.cols();
  Scalar* p = w.data();
  for (Index h = 1; h < n; h *= 2) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        Scalar* x = p + j * d;
        Scalar* y = p + (j + h) * d;
        for (Index c = 0; c < d; ++c) {
          const Scalar u = x[c];
          const Scalar v = y[c];
          x[c] = u + v;
          y[c] = u - v;
        }
      }
    }
  }
  w *= Scalar(1) / std::sqrt(static_cast<Scalar>(n));
}

}  // namespace detail

/// Gaussian sketch: S has i.i.d. N(0, 1/m) entries. S is drawn in column
/// blocks so that only an m x block slice is ever resident.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> apply_gaussian(const Eigen::MatrixBase<Derived>& a, Index m,
                                                     RngStream& rng) {
  using Scalar = typename Derived::Scalar;
  if (m < 1) throw ShapeError("gaussian sketch: m must be >= 1");
  constexpr Index kBlock = 512;
  const Index n = a.rows();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(m));
  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(m, a.cols());
  DenseMatrix<Scalar> block;
  for (Index j0 = 0; j0 < n; j0 += kBlock) {
    const Index width = std::min(kBlock, n - j0);
    block.resize(m, width);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < width; ++j) block(i, j) = Scalar(rng.normal()) * scale;
    out.noalias() += block * a.middleRows(j0, width);
  }
  return out;
}

/// Uniform row sampling without replacement, rescaled by sqrt(n/m).
template <typename Derived>
DenseMatrix<typename Derived::Scalar> apply_uniform(const Eigen::MatrixBase<Derived>& a, Index m,
                                                    RngStream& rng) {
  using Scalar = typename Derived::Scalar;
  const Index n = a.rows();
  detail::require_rows(m, n, "uniform sketch");
  const auto idx = detail::sample_without_replacement(n, m, rng);
  const Scalar scale = std::sqrt(static_cast<Scalar>(n) / static_cast<Scalar>(m));
  DenseMatrix<Scalar> out(m, a.cols());
  for (Index i = 0; i < m; ++i) out.row(i) = scale * a.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

/// Randomized Hadamard sketch with caller-supplied Rademacher signs
/// (length a.rows()). Rows are zero-padded to the next power of two n_pad,
/// transformed, then m of the n_pad rows are sampled with scale sqrt(n_pad/m).
template <typename Derived, typename DerivedSigns>
DenseMatrix<typename Derived::Scalar> apply_hadamard_with_signs(
    const Eigen::MatrixBase<Derived>& a, Index m, const Eigen::MatrixBase<DerivedSigns>& signs,
    RngStream& rng) {
  using Scalar = typename Derived::Scalar;
  const Index n = a.rows();
  const Index n_pad = static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(n)));
  detail::require_rows(m, n_pad, "hadamard sketch");
  if (signs.size() != n) throw ShapeError("hadamard sketch: sign vector length must equal rows");
  DenseMatrix<Scalar> w = DenseMatrix<Scalar>::Zero(n_pad, a.cols());
  w.topRows(n) = signs.asDiagonal() * a;
  detail::fwht_rows(w);
  const auto idx = detail::sample_without_replacement(n_pad, m, rng);
  const Scalar scale = std::sqrt(static_cast<Scalar>(n_pad) / static_cast<Scalar>(m));
  DenseMatrix<Scalar> out(m, a.cols());
  for (Index i = 0; i < m; ++i) out.row(i) = scale * w.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

template <typename Derived>
DenseMatrix<typename Derived::Scalar> apply_hadamard(const Eigen::MatrixBase<Derived>& a, Index m,
                                                     RngStream& rng) {
  using Scalar = typename Derived::Scalar;
  DenseVector<Scalar> signs(a.rows());
  for (Index i = 0; i < a.rows(); ++i) signs(i) = Scalar(rng.rademacher());
  return apply_hadamard_with_signs(a, m, signs, rng);
}

/// Sparse JL transform with exactly s nonzeros per column, applied as a
/// streaming row accumulation; S is never formed.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> apply_sjlt(const Eigen::MatrixBase<Derived>& a, Index m,
                                                 Index s, RngStream& rng) {
  using Scalar = typename Derived::Scalar;
  if (m < 1) throw ShapeError("sjlt sketch: m must be >= 1");
  if (s < 1 || s > m) {
    throw ShapeError("sjlt sketch: need 1 <= s <= m, got s=" + std::to_string(s) +
                     " m=" + std::to_string(m));
  }
  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(m, a.cols());
  detail::for_each_sjlt_entry(a.rows(), m, s, rng, [&](Index col, Index row, double v) {
    out.row(row) += Scalar(v) * a.row(col);
  });
  return out;
}

/// Dense m x n SJLT matrix drawn exactly as apply_sjlt would draw it.
/// Debug aid for tests.
inline Matrix materialize_sjlt(Index n, Index m, Index s, RngStream& rng) {
  Matrix out = Matrix::Zero(m, n);
  detail::for_each_sjlt_entry(n, m, s, rng,
                              [&](Index col, Index row, double v) { out(row, col) = v; });
  return out;
}

/// Uniform sampling down to m2 rows followed by an inner Gaussian or SJLT
/// sketch down to m rows.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> apply_hybrid(const Eigen::MatrixBase<Derived>& a, Index m,
                                                   Index m2, SketchKind inner, Index s,
                                                   RngStream& rng) {
  if (m > m2) {
    throw ShapeError("hybrid sketch: need m <= m2, got m=" + std::to_string(m) +
                     " m2=" + std::to_string(m2));
  }
  detail::require_rows(m2, a.rows(), "hybrid sketch (outer stage)");
  const auto sampled = apply_uniform(a, m2, rng);
  switch (inner) {
    case SketchKind::gaussian:
      return apply_gaussian(sampled, m, rng);
    case SketchKind::sjlt:
      return apply_sjlt(sampled, m, s, rng);
    default:
      throw ShapeError("hybrid sketch: inner stage must be gaussian or sjlt");
  }
}

/// Draws S per `spec` and returns S * a. E[S^T S] = I for every kind.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> apply_sketch(const SketchSpec& spec,
                                                   const Eigen::MatrixBase<Derived>& a,
                                                   RngStream& rng) {
  validate(spec, a.rows());
  switch (spec.kind) {
    case SketchKind::gaussian:
      return apply_gaussian(a, spec.m, rng);
    case SketchKind::hadamard:
      return apply_hadamard(a, spec.m, rng);
    case SketchKind::uniform:
      return apply_uniform(a, spec.m, rng);
    case SketchKind::sjlt:
      return apply_sjlt(a, spec.m, spec.s, rng);
    case SketchKind::hybrid:
      return apply_hybrid(a, spec.m, spec.m2, spec.inner, spec.s, rng);
  }
  throw ShapeError("unknown sketch kind");
}

/// The explicit m x n sketch matrix, obtained by sketching I_n.
inline Matrix materialize_sketch(const SketchSpec& spec, Index n, RngStream& rng) {
  return apply_sketch(spec, Matrix::Identity(n, n), rng);
}

}  // namespace sketchavg
