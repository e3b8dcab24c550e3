#include "sketchavg/sketch.hpp"

#include <array>
#include <utility>

namespace sketchavg {
namespace {

constexpr std::array<std::pair<SketchKind, std::string_view>, 5> kNames{{
    {SketchKind::gaussian, "gaussian"},
    {SketchKind::hadamard, "hadamard"},
    {SketchKind::uniform, "uniform"},
    {SketchKind::sjlt, "sjlt"},
    {SketchKind::hybrid, "hybrid"},
}};

}  // namespace

std::string_view to_string(SketchKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<SketchKind> parse_sketch_kind(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

void validate(const SketchSpec& spec, Index n) {
  if (spec.m < 1) throw ShapeError("sketch: m must be >= 1");
  if (n < 1) throw ShapeError("sketch: input must have at least one row");
  switch (spec.kind) {
    case SketchKind::gaussian:
      return;
    case SketchKind::hadamard: {
      const auto n_pad = static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(n)));
      detail::require_rows(spec.m, n_pad, "hadamard sketch");
      return;
    }
    case SketchKind::uniform:
      detail::require_rows(spec.m, n, "uniform sketch");
      return;
    case SketchKind::sjlt:
      if (spec.s < 1 || spec.s > spec.m) {
        throw ShapeError("sjlt sketch: need 1 <= s <= m, got s=" + std::to_string(spec.s) +
                         " m=" + std::to_string(spec.m));
      }
      return;
    case SketchKind::hybrid:
      if (spec.m > spec.m2) {
        throw ShapeError("hybrid sketch: need m <= m2, got m=" + std::to_string(spec.m) +
                         " m2=" + std::to_string(spec.m2));
      }
      detail::require_rows(spec.m2, n, "hybrid sketch (outer stage)");
      if (spec.inner != SketchKind::gaussian && spec.inner != SketchKind::sjlt) {
        throw ShapeError("hybrid sketch: inner stage must be gaussian or sjlt");
      }
      if (spec.inner == SketchKind::sjlt && (spec.s < 1 || spec.s > spec.m)) {
        throw ShapeError("hybrid sketch: inner sjlt needs 1 <= s <= m");
      }
      return;
  }
}

}  // namespace sketchavg
