#include <doctest.h>

#include <cstdlib>
#include <set>

#include "oracles.hpp"
#include "sketchavg/cluster.hpp"

using namespace sketchavg;

TEST_CASE("make_cluster derives distinct worker streams") {
  const ClusterConfig c = make_cluster(77, 5, SketchSpec{SketchKind::gaussian, 10});
  CHECK(c.q() == 5);
  CHECK(c.master_seed == 77);
  std::set<std::uint64_t> ids;
  for (std::size_t k = 0; k < c.q(); ++k) {
    CHECK(c.workers[k].stream.seed() == 77);
    CHECK(c.workers[k].stream.stream_id() == k + 1);
    ids.insert(c.workers[k].stream.stream_id());
  }
  CHECK(ids.size() == 5);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("validate(ClusterConfig)") {
  ClusterConfig empty;
  CHECK_THROWS(validate(empty));
  ClusterConfig dup = make_cluster(1, 2, SketchSpec{SketchKind::gaussian, 4});
  dup.workers[1].stream = dup.workers[0].stream;
  CHECK_THROWS(validate(dup));
  ClusterConfig zero = make_cluster(1, 2, SketchSpec{SketchKind::gaussian, 4});
  zero.workers[0].sketch.m = 0;
  CHECK_THROWS(validate(zero));
}

TEST_CASE("run_cluster_round: echo in index order, serial and parallel") {
  for (unsigned threads : {1u, 3u, 8u}) {
    ClusterConfig c = make_cluster(5, 3, SketchSpec{SketchKind::gaussian, 2});
    c.threads = threads;
    const auto out = run_cluster_round(c, [](std::size_t k, const WorkerConfig&) { return k; });
    REQUIRE(out.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(out[k] == k);
  }
}

TEST_CASE("run_cluster_round: heterogeneous sketch sizes give m_k x d outputs") {
  const std::vector<SketchSpec> specs{{SketchKind::gaussian, 10}, {SketchKind::sjlt, 20, 2},
                                      {SketchKind::uniform, 40}};
  ClusterConfig c = make_cluster(9, specs);
  CHECK(sketch_sizes(c) == std::vector<std::int64_t>{10, 20, 40});
  const Matrix a = oracle::gaussian_matrix(60, 4, 1);
  const auto out = run_cluster_round(c, [&](std::size_t, const WorkerConfig& w) {
    RngStream rng = w.stream;
    return apply_sketch(w.sketch, a, rng);
  });
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(out[k].rows() == specs[k].m);
    CHECK(out[k].cols() == 4);
  }
}

TEST_CASE("run_cluster_round: bitwise identical sketches serial vs parallel") {
  const Matrix a = oracle::gaussian_matrix(200, 6, 2);
  auto round = [&](unsigned threads) {
    ClusterConfig c = make_cluster(11, 6, SketchSpec{SketchKind::gaussian, 30});
    c.threads = threads;
    auto dirs = run_cluster_round(c, [&](std::size_t, const WorkerConfig& w) {
      RngStream rng = w.stream.child(0);
      const Matrix sa = apply_sketch(w.sketch, a, rng);
      return Vector((sa.transpose() * sa).ldlt().solve(Vector::Ones(6)));
    });
    Vector avg = Vector::Zero(6);
    for (const auto& d : dirs) avg += d;
    return Vector(avg / 6.0);
  };
  const Vector serial = round(1);
  CHECK(round(4) == serial);
  CHECK(round(0) == serial);
}

TEST_CASE("run_cluster_round: fail-fast with the lowest failing worker index") {
  ClusterConfig c = make_cluster(3, 5, SketchSpec{SketchKind::gaussian, 2});
  c.threads = 3;
  try {
    run_cluster_round(c, [](std::size_t k, const WorkerConfig&) -> int {
      if (k == 3) throw ShapeError("bad shape");
      if (k == 1) throw std::runtime_error("boom");
      return 0;
    });
    FAIL("expected WorkerError");
  } catch (const WorkerError& e) {
    CHECK(e.worker() == 1);
    CHECK_FALSE(e.invalid_input());
    CHECK(std::string(e.what()).find("worker 1") != std::string::npos);
  }
  try {
    run_cluster_round(c, [](std::size_t k, const WorkerConfig&) -> int {
      if (k == 4) throw ShapeError("bad shape");
      return 0;
    });
  } catch (const WorkerError& e) {
    CHECK(e.worker() == 4);
    CHECK(e.invalid_input());
  }
}

TEST_CASE("round timing is reported") {
  ClusterConfig c = make_cluster(3, 2, SketchSpec{SketchKind::gaussian, 2});
  RoundTiming timing;
  run_cluster_round(c, [](std::size_t k, const WorkerConfig&) { return k; }, &timing);
  CHECK(timing.elapsed_seconds >= 0.0);
  CHECK(timing.max_worker_seconds <= timing.elapsed_seconds + 1e-3);
}

TEST_CASE("resolve_threads honours the environment override") {
  ::unsetenv("SKETCHAVG_THREADS");
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
  ::setenv("SKETCHAVG_THREADS", "2", 1);
  CHECK(resolve_threads(7) == 2);
  ::unsetenv("SKETCHAVG_THREADS");
}
