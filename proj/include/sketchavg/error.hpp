#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sketchavg {

/// Base class for all library errors. `invalid_input()` separates caller
/// mistakes (bad shapes, infeasible parameters) from runtime failures; the
/// CLI maps the former to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, bool invalid_input = true)
      : std::runtime_error(what), invalid_input_(invalid_input) {}
  bool invalid_input() const noexcept { return invalid_input_; }

 private:
  bool invalid_input_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : Error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")", false),
        pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Inverse-Wishart moment requested outside its domain (m too small for d).
class MomentUndefined : public Error {
 public:
  using Error::Error;
};

/// No bias-correcting regularization exists for the requested parameters.
class Infeasible : public Error {
 public:
  Infeasible(const std::string& what, std::ptrdiff_t worker = -1)
      : Error(what), worker_(worker) {}
  std::ptrdiff_t worker() const noexcept { return worker_; }

 private:
  std::ptrdiff_t worker_;
};

/// A barrier-problem query outside the strictly feasible region.
class DomainViolation : public Error {
 public:
  DomainViolation(const std::string& what, double worst_margin)
      : Error(what, false), worst_margin_(worst_margin) {}
  double worst_margin() const noexcept { return worst_margin_; }

 private:
  double worst_margin_;
};

/// Failure inside a simulated worker; carries the worker index.
class WorkerError : public Error {
 public:
  WorkerError(std::size_t worker, const std::string& what, bool invalid_input)
      : Error("worker " + std::to_string(worker) + ": " + what, invalid_input), worker_(worker) {}
  std::size_t worker() const noexcept { return worker_; }

 private:
  std::size_t worker_;
};

}  // namespace sketchavg
