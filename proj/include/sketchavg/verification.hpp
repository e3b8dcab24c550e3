#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sketchavg {

/// One observed-versus-predicted comparison inside a suite.
struct Check {
  std::string label;
  double observed = 0.0;
  double predicted = 0.0;
  /// Human-readable tolerance, e.g. "rel <= 0.05".
  std::string tolerance;
  bool pass = false;
  /// How far the observation is from the tolerance boundary (positive = failed by this much).
  double miss = 0.0;
};

struct SuiteResult {
  std::string name;
  std::string title;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20190601;
  unsigned threads = 1;
};

/// moments, theta3, thm1, cor1, thm2, lambda, thm3, thm4, hetero, sketches,
/// derivs, determinism; in that order.
const std::vector<std::string>& suite_names();

/// Throws Error for an unknown suite name.
SuiteResult run_suite(std::string_view name, const VerifyOptions& options = {});

/// Table of checks followed by a PASS/FAIL line; failures show their miss.
void print_suite(std::ostream& out, const SuiteResult& result);

}  // namespace sketchavg
