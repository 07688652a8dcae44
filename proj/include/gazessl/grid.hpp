#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gazessl {

// Row-major pixel/value grid with interleaved channels: index = (y*width + x)*channels + c.
// On disk ("SGRD"): little-endian magic, u32 width, u32 height, u32 channels, then
// width*height*channels float32 values. A file may hold several grids back to back.
struct Grid {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 1;
  std::vector<float> values;

  Grid() = default;
  Grid(std::uint32_t w, std::uint32_t h, std::uint32_t c = 1, float fill = 0.0f);

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  float& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const float& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Grid&) const = default;
};

void validate(const Grid& g);

void write_grid(std::ostream& os, const Grid& g);
// Returns false on clean EOF before a header; throws FormatError on a partial grid.
bool read_grid(std::istream& is, Grid& out);

void write_grids(const std::filesystem::path& path, std::span<const Grid> grids);
std::vector<Grid> read_grids(const std::filesystem::path& path);
// Exactly one grid expected in the file.
Grid read_single_grid(const std::filesystem::path& path);

// n x p matrix <-> grid of width p, height n, one channel (float32 on disk).
Grid grid_from_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_grid(const Grid& g);
// Flatten a grid into a row vector of doubles (row-major, channels interleaved).
Eigen::RowVectorXd flatten(const Grid& g);

}  // namespace gazessl
