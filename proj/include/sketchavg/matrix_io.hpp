#pragma once

#include <filesystem>
#include <iosfwd>

#include "sketchavg/types.hpp"

namespace sketchavg {

// SAMX: "SAMX", u32 rows, u32 cols (little-endian), then rows*cols
// little-endian float64 values in row-major order.
void write_samx(std::ostream& out, const Matrix& m);
Matrix read_samx(std::istream& in);
void write_samx(const std::filesystem::path& path, const Matrix& m);
Matrix read_samx(const std::filesystem::path& path);

// Headerless CSV, one matrix row per line, 17 significant digits.
void write_csv(std::ostream& out, const Matrix& m);
Matrix read_csv(std::istream& in);
void write_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_csv(const std::filesystem::path& path);

}  // namespace sketchavg
