#include "gazessl/grid.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "gazessl/error.hpp"

namespace gazessl {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'G', 'R', 'D'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

Grid::Grid(std::uint32_t w, std::uint32_t h, std::uint32_t c, float fill)
    : width(w), height(h), channels(c), values(static_cast<std::size_t>(w) * h * c, fill) {}

void validate(const Grid& g) {
  require(g.width > 0 && g.height > 0 && g.channels > 0, "grid",
          "dimensions must be positive");
  require(g.values.size() == static_cast<std::size_t>(g.width) * g.height * g.channels, "grid",
          "value count does not match width*height*channels");
}

void write_grid(std::ostream& os, const Grid& g) {
  validate(g);
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, g.width);
  put_u32(os, g.height);
  put_u32(os, g.channels);
  for (float f : g.values) put_u32(os, std::bit_cast<std::uint32_t>(f));
  if (!os) throw FormatError("grid: write failed");
}

bool read_grid(std::istream& is, Grid& out) {
  unsigned char header[16];
  is.read(reinterpret_cast<char*>(header), sizeof header);
  const auto got = is.gcount();
  if (got == 0) return false;
  if (got != static_cast<std::streamsize>(sizeof header))
    throw FormatError("grid: truncated header");
  if (std::memcmp(header, kMagic.data(), 4) != 0) throw FormatError("grid: bad magic");
  const std::uint32_t w = get_u32(header + 4);
  const std::uint32_t h = get_u32(header + 8);
  const std::uint32_t c = get_u32(header + 12);
  if (w == 0 || h == 0 || c == 0) throw FormatError("grid: zero dimension");
  const std::uint64_t n = static_cast<std::uint64_t>(w) * h * c;
  if (n > (std::uint64_t{1} << 32)) throw FormatError("grid: implausible size");
  std::vector<unsigned char> raw(n * 4);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size()))
    throw FormatError("grid: truncated payload");
  Grid g;
  g.width = w;
  g.height = h;
  g.channels = c;
  g.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.values[i] = std::bit_cast<float>(get_u32(&raw[i * 4]));
  out = std::move(g);
  return true;
}

void write_grids(const std::filesystem::path& path, std::span<const Grid> grids) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("grid: cannot open " + path.string() + " for writing");
  for (const auto& g : grids) write_grid(os, g);
}

std::vector<Grid> read_grids(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("grid: cannot open " + path.string());
  std::vector<Grid> out;
  Grid g;
  while (read_grid(is, g)) out.push_back(std::move(g));
  return out;
}

Grid read_single_grid(const std::filesystem::path& path) {
  auto grids = read_grids(path);
  if (grids.size() != 1)
    throw FormatError("grid: expected exactly one grid in " + path.string() + ", found " +
                      std::to_string(grids.size()));
  return std::move(grids.front());
}

Grid grid_from_matrix(const Eigen::MatrixXd& m) {
  require(m.rows() > 0 && m.cols() > 0, "grid_from_matrix", "empty matrix");
  Grid g(static_cast<std::uint32_t>(m.cols()), static_cast<std::uint32_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      g.at(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(r)) =
          static_cast<float>(m(r, c));
  return g;
}

Eigen::MatrixXd matrix_from_grid(const Grid& g) {
  validate(g);
  require(g.channels == 1, "matrix_from_grid", "expected a single-channel grid");
  Eigen::MatrixXd m(g.height, g.width);
  for (std::uint32_t r = 0; r < g.height; ++r)
    for (std::uint32_t c = 0; c < g.width; ++c) m(r, c) = g.at(c, r);
  return m;
}

Eigen::RowVectorXd flatten(const Grid& g) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(g.values.size()));
  for (std::size_t i = 0; i < g.values.size(); ++i) v(static_cast<Eigen::Index>(i)) = g.values[i];
  return v;
}

}  // namespace gazessl
