#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "sketchavg/sketch.hpp"

using namespace sketchavg;

namespace {

/// Monte Carlo mean of S^T S.
Matrix mean_gram(const SketchSpec& spec, Index n, int trials, RngStream& rng) {
  Matrix acc = Matrix::Zero(n, n);
  for (int t = 0; t < trials; ++t) {
    const Matrix s = materialize_sketch(spec, n, rng);
    acc.noalias() += s.transpose() * s;
  }
  return acc / trials;
}

/// Monte Carlo mean of diag(S^T S), i.e. of the squared column norms.
Vector mean_diag(const SketchSpec& spec, Index n, int trials, RngStream& rng) {
  Vector acc = Vector::Zero(n);
  for (int t = 0; t < trials; ++t) acc += materialize_sketch(spec, n, rng).colwise().squaredNorm().transpose();
  return acc / trials;
}

double max_offdiag(const Matrix& m) {
  Matrix off = m;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("RngStream: replay, separation and children") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs = differs || (x != c.normal());
  }
  CHECK(differs);

  const RngStream parent(9, 1);
  RngStream c1 = parent.child(5), c2 = parent.child(5), c3 = parent.child(6);
  CHECK(c1.stream_id() == c2.stream_id());
  CHECK(c1.stream_id() != c3.stream_id());
  CHECK(c1.uniform() == c2.uniform());

  RngStream r(1, 0);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sketch kind names round trip") {
  for (auto k : {SketchKind::gaussian, SketchKind::hadamard, SketchKind::uniform, SketchKind::sjlt,
                 SketchKind::hybrid}) {
    CHECK(parse_sketch_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_sketch_kind("countsketch").has_value());
}

TEST_CASE("gaussian: scalar case and column norm concentration") {
  RngStream rng(2, 0);
  const int trials = 20000;
  double sum = 0, sq = 0;
  for (int t = 0; t < trials; ++t) {
    const double v = apply_gaussian(Matrix::Ones(1, 1), 1, rng)(0, 0);
    sum += v * v;
    sq += v * v * v * v;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se);

  const Index m = 10000;
  const double norm2 = apply_gaussian(Matrix::Ones(1, 1), m, rng).squaredNorm();
  CHECK(std::abs(norm2 - 1.0) <= 3.0 * std::sqrt(2.0 / m));
}

TEST_CASE("gaussian: E[S^T S] = I") {
  RngStream rng(3, 0);
  const Matrix g = mean_gram({SketchKind::gaussian, 10}, 40, 2000, rng);
  CHECK((g - Matrix::Identity(40, 40)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("uniform: full sampling is a row permutation, E[S^T S] = I") {
  RngStream rng(4, 0);
  const Matrix a = oracle::gaussian_matrix(9, 3, 5);
  const Matrix s = apply_uniform(a, 9, rng);
  std::multiset<double> want, got;
  for (Index i = 0; i < 9; ++i) {
    want.insert(a(i, 0));
    got.insert(s(i, 0));
  }
  CHECK(want == got);
  CHECK(s.colwise().squaredNorm().isApprox(a.colwise().squaredNorm()));

  const SketchSpec spec{SketchKind::uniform, 50};
  const Matrix g = mean_gram(spec, 200, 200, rng);
  CHECK(max_offdiag(g) == 0.0);
  CHECK((mean_diag(spec, 200, 20000, rng).array() - 1.0).abs().maxCoeff() < 0.08);

  CHECK_THROWS_AS(apply_uniform(a, 10, rng), ShapeError);
}

TEST_CASE("hadamard: transform matches the Sylvester matrix") {
  const Matrix a = oracle::gaussian_matrix(16, 3, 6);
  DenseMatrix<double> w = a;
  detail::fwht_rows(w);
  CHECK((w - oracle::hadamard(16) * a / 4.0).cwiseAbs().maxCoeff() < 1e-12);

  // m = n_pad with +1 signs: every row of H A / sqrt(n_pad) appears once, scale 1.
  RngStream rng(7, 0);
  const Matrix b = oracle::gaussian_matrix(13, 2, 8);
  Matrix padded = Matrix::Zero(16, 2);
  padded.topRows(13) = b;
  const Matrix want = oracle::hadamard(16) * padded / 4.0;
  const Matrix got = apply_hadamard_with_signs(b, 16, Vector::Ones(13), rng);
  for (Index i = 0; i < 16; ++i) {
    double best = 1e300;
    for (Index j = 0; j < 16; ++j) best = std::min(best, (got.row(i) - want.row(j)).norm());
    CHECK(best < 1e-12);
  }
}

TEST_CASE("hadamard: single row and E[S^T S] = I after padding") {
  RngStream rng(9, 0);
  const Matrix one = Matrix::Constant(1, 1, 2.5);
  CHECK(std::abs(apply_hadamard(one, 1, rng)(0, 0)) == doctest::Approx(2.5));

  const Matrix g = mean_gram({SketchKind::hadamard, 64}, 300, 2000, rng);
  CHECK((g - Matrix::Identity(300, 300)).cwiseAbs().maxCoeff() < 0.08);
  CHECK_THROWS_AS(apply_hadamard(Matrix::Zero(5, 2), 9, rng), ShapeError);
}

TEST_CASE("sjlt: column structure, exact streaming, E[S^T S] = I") {
  RngStream rng(10, 0);
  const Matrix s = materialize_sjlt(30, 12, 4, rng);
  for (Index c = 0; c < 30; ++c) {
    int nnz = 0;
    for (Index r = 0; r < 12; ++r) {
      if (s(r, c) == 0.0) continue;
      ++nnz;
      CHECK(std::abs(s(r, c)) == doctest::Approx(0.5));
    }
    CHECK(nnz == 4);
  }

  for (Index n : {1, 2, 9, 31, 50}) {
    const Matrix a = oracle::gaussian_matrix(n, 4, 11 + static_cast<std::uint32_t>(n));
    RngStream r1(12, static_cast<std::uint64_t>(n)), r2 = r1;
    const Matrix streamed = apply_sjlt(a, 7, 3, r1);
    const Matrix dense = oracle::triple_loop(materialize_sjlt(n, 7, 3, r2), a);
    CHECK(streamed == dense);
  }

  const Matrix g = mean_gram({SketchKind::sjlt, 50, 8}, 200, 2000, rng);
  CHECK((g - Matrix::Identity(200, 200)).cwiseAbs().maxCoeff() < 0.08);
  CHECK_THROWS_AS(apply_sjlt(Matrix::Zero(5, 2), 3, 4, rng), ShapeError);
}

TEST_CASE("hybrid: ordering checks and E[S^T S] = I") {
  RngStream rng(13, 0);
  const SketchSpec spec{SketchKind::hybrid, 25, 1, 100, SketchKind::gaussian};
  const Matrix g = mean_gram(spec, 400, 2000, rng);
  CHECK(max_offdiag(g) < 0.1);
  CHECK((mean_diag(spec, 400, 20000, rng).array() - 1.0).abs().maxCoeff() < 0.1);

  const Matrix a = oracle::gaussian_matrix(20, 2, 14);
  CHECK_THROWS_AS(apply_hybrid(a, 12, 10, SketchKind::gaussian, 1, rng), ShapeError);
  CHECK_THROWS_AS(apply_hybrid(a, 5, 10, SketchKind::hadamard, 1, rng), ShapeError);
  CHECK_THROWS_AS(apply_hybrid(a, 5, 30, SketchKind::gaussian, 1, rng), ShapeError);

  // m2 = n: the outer stage is a row permutation.
  const Matrix out = apply_hybrid(a, 6, 20, SketchKind::sjlt, 2, rng);
  CHECK(out.rows() == 6);
  CHECK(out.cols() == 2);
}

TEST_CASE("validate(SketchSpec) rejects infeasible sizes") {
  CHECK_NOTHROW(validate(SketchSpec{SketchKind::gaussian, 500}, 10));
  CHECK_THROWS_AS(validate(SketchSpec{SketchKind::uniform, 11}, 10), ShapeError);
  CHECK_THROWS_AS(validate(SketchSpec{SketchKind::sjlt, 4, 5}, 10), ShapeError);
  CHECK_THROWS_AS(validate(SketchSpec{SketchKind::gaussian, 0}, 10), ShapeError);
  CHECK_NOTHROW(validate(SketchSpec{SketchKind::hadamard, 16}, 10));
  CHECK_THROWS_AS(validate(SketchSpec{SketchKind::hadamard, 17}, 10), ShapeError);
}

TEST_CASE("apply_sketch reproduces from a copied stream") {
  const Matrix a = oracle::gaussian_matrix(64, 5, 15);
  for (auto kind : {SketchKind::gaussian, SketchKind::hadamard, SketchKind::uniform, SketchKind::sjlt,
                    SketchKind::hybrid}) {
    const SketchSpec spec{kind, 8, 2, 32, SketchKind::sjlt};
    RngStream r1(16, 2), r2 = r1;
    CHECK(apply_sketch(spec, a, r1) == apply_sketch(spec, a, r2));
  }
}
