#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

#include "sketchavg/error.hpp"
#include "sketchavg/rng.hpp"
#include "sketchavg/sketch.hpp"

namespace sketchavg {

struct WorkerConfig {
  SketchSpec sketch;
  RngStream stream;

  Index m() const { return sketch.m; }
};

/// q simulated workers plus the master seed they were derived from.
struct ClusterConfig {
  std::vector<WorkerConfig> workers;
  std::uint64_t master_seed = 0;
  /// Data split by rows across workers: gradients need their own round.
  bool partitioned = false;
  /// Worker threads per round; 0 means one per hardware thread.
  unsigned threads = 1;

  std::size_t q() const { return workers.size(); }
};

/// One worker per spec. Worker k draws from stream (master_seed, k + 1).
ClusterConfig make_cluster(std::uint64_t master_seed, std::span<const SketchSpec> specs);
/// q identical workers.
ClusterConfig make_cluster(std::uint64_t master_seed, std::size_t q, const SketchSpec& spec);

/// Throws if the cluster is empty, a worker has m < 1, or stream ids repeat.
void validate(const ClusterConfig& cluster);

std::vector<std::int64_t> sketch_sizes(const ClusterConfig& cluster);

/// Thread count after applying the SKETCHAVG_THREADS environment override;
/// 0 resolves to the hardware concurrency.
unsigned resolve_threads(unsigned requested);

struct RoundTiming {
  double elapsed_seconds = 0.0;
  double max_worker_seconds = 0.0;
};

/// Runs `task(k, worker)` for every worker and returns the outputs in worker
/// order. Each task must depend only on its own worker and on read-only shared
/// data, which makes serial and parallel execution produce identical results.
/// If any worker throws, nothing is returned: the lowest failing index is
/// rethrown as WorkerError.
template <typename Task>
auto run_cluster_round(const ClusterConfig& cluster, Task&& task, RoundTiming* timing = nullptr) {
  using Out = std::invoke_result_t<Task&, std::size_t, const WorkerConfig&>;
  using Clock = std::chrono::steady_clock;
  const std::size_t q = cluster.q();
  std::vector<std::optional<Out>> slots(q);
  std::vector<std::exception_ptr> errors(q);
  std::vector<double> seconds(q, 0.0);
  std::atomic<std::size_t> next{0};

  auto drain = [&] {
    for (std::size_t k = next.fetch_add(1); k < q; k = next.fetch_add(1)) {
      const auto start = Clock::now();
      try {
        slots[k].emplace(task(k, cluster.workers[k]));
      } catch (...) {
        errors[k] = std::current_exception();
      }
      seconds[k] = std::chrono::duration<double>(Clock::now() - start).count();
    }
  };

  const auto start = Clock::now();
  const unsigned threads = static_cast<unsigned>(
      std::min<std::size_t>(q, cluster.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                                    : cluster.threads));
  if (threads <= 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(drain);
    drain();
  }
  if (timing) {
    timing->elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    timing->max_worker_seconds = 0.0;
    for (double s : seconds) timing->max_worker_seconds = std::max(timing->max_worker_seconds, s);
  }

  for (std::size_t k = 0; k < q; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const WorkerError&) {
      throw;
    } catch (const Error& e) {
      throw WorkerError(k, e.what(), e.invalid_input());
    } catch (const std::exception& e) {
      throw WorkerError(k, e.what(), false);
    }
  }

  std::vector<Out> out;
  out.reserve(q);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace sketchavg
