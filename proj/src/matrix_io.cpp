#include "sketchavg/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sketchavg/error.hpp"

namespace sketchavg {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'A', 'M', 'X'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw Error("SAMX: truncated header", false);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing", false);
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading", false);
  return in;
}

}  // namespace

void write_samx(std::ostream& out, const Matrix& m) {
  static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);
  out.write(kMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), 8);
  }
  if (!out) throw Error("SAMX: write failed", false);
}

Matrix read_samx(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic) throw Error("SAMX: bad magic", true);
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  if (rows == 0 || cols == 0) throw ShapeError("SAMX: zero dimension");
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), 8);
    if (!in) throw Error("SAMX: truncated payload", true);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  if (!m.allFinite()) throw Error("SAMX: non-finite entry", true);
  return m;
}

void write_samx(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path, std::ios::binary);
  write_samx(out, m);
}

Matrix read_samx(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_samx(in);
}

void write_csv(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

Matrix read_csv(std::istream& in) {
  std::vector<double> values;
  Index rows = 0;
  Index cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0;
      const char* first = cell.data();
      while (first != cell.data() + cell.size() && *first == ' ') ++first;
      auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
      if (ec != std::errc() || !std::isfinite(v)) {
        throw Error("CSV: bad value '" + cell + "' on line " + std::to_string(rows + 1), true);
      }
      values.push_back(v);
      ++count;
    }
    if (cols >= 0 && count != cols) {
      throw ShapeError("CSV: ragged row " + std::to_string(rows + 1));
    }
    cols = count;
    ++rows;
  }
  if (rows == 0 || cols <= 0) throw ShapeError("CSV: empty matrix");
  return Eigen::Map<Matrix>(values.data(), rows, cols);
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path, std::ios::out);
  write_csv(out, m);
}

Matrix read_csv(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return read_csv(in);
}

}  // namespace sketchavg
