#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gazessl/grid.hpp"

namespace gazessl {

// Pixel coordinates; x grows to the right, y downwards.
struct GazeXY {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const GazeXY&) const = default;
};

struct GazePoint {
  int frame_idx = 0;
  double timestamp_ms = 0.0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const GazePoint&) const = default;
};

struct GazeTrajectory {
  std::string video_id;
  std::string clip_id;
  std::vector<GazePoint> points;
  double frame_period_ms = 200.0;
  bool operator==(const GazeTrajectory&) const = default;
};

// Inclusive index range into GazeTrajectory::points.
struct FixationSegment {
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;
  bool contains(std::size_t i) const { return start_idx <= i && i <= end_idx; }
  bool operator==(const FixationSegment&) const = default;
};

struct CropWindow {
  int left = 0;
  int top = 0;
  int size = 0;
  bool contains(double x, double y) const {
    return x >= left && x < left + size && y >= top && y < top + size;
  }
  bool operator==(const CropWindow&) const = default;
};

struct Histogram {
  std::vector<double> bin_edges;  // counts.size() + 1 entries
  std::vector<std::size_t> counts;
};

struct DisplacementStats {
  double lag_ms = 0.0;
  std::vector<double> displacements;  // sorted ascending
  Histogram histogram;
  double mle_rate = 0.0;  // exponential rate, 1/pixels; +inf when all displacements are 0
  bool degenerate = false;
};

struct GazeDistribution {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double std_x = 0.0;  // population standard deviation
  double std_y = 0.0;
};

// Throws InvalidInput unless the map is a non-empty single-channel grid of non-negative values.
void validate_saliency(const Grid& map);

// Strictly increasing frame_idx/timestamps, timestamps consistent with frame_period_ms.
void validate(const GazeTrajectory& traj);

// Most salient pixel; ties resolve to the smallest row-major index.
GazeXY peak_gaze(const Grid& saliency);

// n x n window centred on the gaze (round-half-up), shifted minimally and independently per
// axis so it lies inside the image.
CropWindow crop_window(GazeXY gaze, int n, int image_w, int image_h);

Grid apply_crop(const Grid& frame, const CropWindow& window);

// Area-average downsampling; input dimensions must be integer multiples of the output.
Grid downsample_area(const Grid& frame, std::uint32_t out_w, std::uint32_t out_h);

// Consecutive points join a fixation while their gaze speed stays strictly below
// p / 200 px/ms (p = maximum movement allowed per 200 ms).
std::vector<FixationSegment> segment_fixations(const GazeTrajectory& traj, double p);

double exponential_rate_mle(std::span<const double> displacements);

// Euclidean displacements between all point pairs separated by lag_ms
// (within half a frame period), pooled over trajectories.
DisplacementStats displacement_stats(std::span<const GazeTrajectory> trajs, double lag_ms,
                                     std::size_t bins = 30);

GazeDistribution gaze_distribution(std::span<const GazeTrajectory> trajs);

// JSON-lines: one object per point with keys video_id, clip_id, frame_idx, timestamp_ms, x, y.
// Lines sharing (video_id, clip_id) are grouped in first-seen order; the frame period is
// inferred from the first two points, falling back to default_period_ms.
void write_trajectories_jsonl(const std::filesystem::path& path,
                              std::span<const GazeTrajectory> trajs);
std::vector<GazeTrajectory> read_trajectories_jsonl(const std::filesystem::path& path,
                                                    double default_period_ms = 200.0);

}  // namespace gazessl
