#include "sketchavg/cluster.hpp"

#include <charconv>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>

namespace sketchavg {

ClusterConfig make_cluster(std::uint64_t master_seed, std::span<const SketchSpec> specs) {
  ClusterConfig cluster;
  cluster.master_seed = master_seed;
  cluster.workers.reserve(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    cluster.workers.push_back({specs[k], RngStream(master_seed, k + 1)});
  }
  validate(cluster);
  return cluster;
}

ClusterConfig make_cluster(std::uint64_t master_seed, std::size_t q, const SketchSpec& spec) {
  const std::vector<SketchSpec> specs(q, spec);
  return make_cluster(master_seed, specs);
}

void validate(const ClusterConfig& cluster) {
  if (cluster.workers.empty()) throw Error("cluster: need at least one worker");
  std::set<std::uint64_t> ids;
  for (std::size_t k = 0; k < cluster.q(); ++k) {
    const auto& w = cluster.workers[k];
    if (w.m() < 1) throw Error("cluster: worker " + std::to_string(k) + " has sketch size < 1");
    if (!ids.insert(w.stream.stream_id()).second) {
      throw Error("cluster: worker " + std::to_string(k) + " reuses a stream id");
    }
  }
}

std::vector<std::int64_t> sketch_sizes(const ClusterConfig& cluster) {
  std::vector<std::int64_t> out;
  out.reserve(cluster.q());
  for (const auto& w : cluster.workers) out.push_back(w.m());
  return out;
}

unsigned resolve_threads(unsigned requested) {
  if (const char* env = std::getenv("SKETCHAVG_THREADS")) {
    const std::string_view text(env);
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size()) requested = value;
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

}  // namespace sketchavg
