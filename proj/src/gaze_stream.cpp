#include "gazessl/gaze_stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "gazessl/error.hpp"

namespace gazessl {

void validate_saliency(const Grid& map) {
  require(map.width > 0 && map.height > 0 && !map.values.empty(), "saliency", "empty map");
  validate(map);
  require(map.channels == 1, "saliency", "expected a single-channel map");
  for (float v : map.values)
    require(v >= 0.0f && std::isfinite(v), "saliency", "values must be finite and non-negative");
}

void validate(const GazeTrajectory& traj) {
  require(traj.frame_period_ms > 0.0, "trajectory", "frame_period_ms must be positive");
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const auto& p = traj.points[i];
    require(p.frame_idx >= 0 && p.timestamp_ms >= 0.0, "trajectory",
            "negative frame index or timestamp at point " + std::to_string(i));
    if (i == 0) continue;
    const auto& q = traj.points[i - 1];
    require(p.frame_idx > q.frame_idx && p.timestamp_ms > q.timestamp_ms, "trajectory",
            "points must be strictly increasing at point " + std::to_string(i));
    const double expected = (p.frame_idx - q.frame_idx) * traj.frame_period_ms;
    require(std::abs((p.timestamp_ms - q.timestamp_ms) - expected) <= 1e-6, "trajectory",
            "timestamp inconsistent with frame period at point " + std::to_string(i));
  }
}

GazeXY peak_gaze(const Grid& saliency) {
  validate_saliency(saliency);
  std::size_t best = 0;
  for (std::size_t i = 1; i < saliency.values.size(); ++i)
    if (saliency.values[i] > saliency.values[best]) best = i;
  return {static_cast<double>(best % saliency.width), static_cast<double>(best / saliency.width)};
}

namespace {

int place_axis(double g, int n, int extent) {
  const int centred = static_cast<int>(std::floor(g - n / 2.0 + 0.5));
  return std::clamp(centred, 0, extent - n);
}

}  // namespace

CropWindow crop_window(GazeXY gaze, int n, int image_w, int image_h) {
  require(n > 0, "crop_window", "crop size must be positive");
  require(image_w > 0 && image_h > 0, "crop_window", "image dimensions must be positive");
  require(n <= std::min(image_w, image_h), "crop_window",
          "crop size " + std::to_string(n) + " exceeds image dimension");
  require(gaze.x >= 0 && gaze.x < image_w && gaze.y >= 0 && gaze.y < image_h, "crop_window",
          "gaze outside image");
  return {place_axis(gaze.x, n, image_w), place_axis(gaze.y, n, image_h), n};
}

Grid apply_crop(const Grid& frame, const CropWindow& window) {
  validate(frame);
  require(window.size > 0 && window.left >= 0 && window.top >= 0 &&
              window.left + window.size <= static_cast<int>(frame.width) &&
              window.top + window.size <= static_cast<int>(frame.height),
          "apply_crop", "window out of bounds");
  const auto n = static_cast<std::uint32_t>(window.size);
  Grid out(n, n, frame.channels);
  const std::size_t row = static_cast<std::size_t>(n) * frame.channels;
  for (std::uint32_t y = 0; y < n; ++y) {
    const float* src = &frame.at(static_cast<std::uint32_t>(window.left),
                                 static_cast<std::uint32_t>(window.top) + y);
    std::copy(src, src + row, &out.at(0, y));
  }
  return out;
}

Grid downsample_area(const Grid& frame, std::uint32_t out_w, std::uint32_t out_h) {
  validate(frame);
  require(out_w > 0 && out_h > 0 && frame.width % out_w == 0 && frame.height % out_h == 0,
          "downsample_area", "input size must be an integer multiple of the output size");
  const std::uint32_t fx = frame.width / out_w;
  const std::uint32_t fy = frame.height / out_h;
  const double inv = 1.0 / (static_cast<double>(fx) * fy);
  Grid out(out_w, out_h, frame.channels);
  for (std::uint32_t y = 0; y < out_h; ++y)
    for (std::uint32_t x = 0; x < out_w; ++x)
      for (std::uint32_t c = 0; c < frame.channels; ++c) {
        double acc = 0.0;
        for (std::uint32_t dy = 0; dy < fy; ++dy)
          for (std::uint32_t dx = 0; dx < fx; ++dx) acc += frame.at(x * fx + dx, y * fy + dy, c);
        out.at(x, y, c) = static_cast<float>(acc * inv);
      }
  return out;
}

std::vector<FixationSegment> segment_fixations(const GazeTrajectory& traj, double p) {
  require(!traj.points.empty(), "segment_fixations", "trajectory has no points");
  require(p > 0.0, "segment_fixations", "threshold must be positive");
  const double max_speed = p / 200.0;  // px per ms
  std::vector<FixationSegment> out;
  FixationSegment cur{0, 0};
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    const auto& a = traj.points[i - 1];
    const auto& b = traj.points[i];
    const double dt = b.timestamp_ms - a.timestamp_ms;
    require(dt > 0.0, "segment_fixations",
            "timestamps not strictly increasing at point " + std::to_string(i));
    const double speed = std::hypot(b.x - a.x, b.y - a.y) / dt;
    if (speed < max_speed) {
      cur.end_idx = i;
    } else {
      out.push_back(cur);
      cur = {i, i};
    }
  }
  out.push_back(cur);
  return out;
}

double exponential_rate_mle(std::span<const double> displacements) {
  require(!displacements.empty(), "exponential_rate_mle", "no samples");
  const double mean =
      std::accumulate(displacements.begin(), displacements.end(), 0.0) / displacements.size();
  return mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
}

DisplacementStats displacement_stats(std::span<const GazeTrajectory> trajs, double lag_ms,
                                     std::size_t bins) {
  require(lag_ms > 0.0, "displacement_stats", "lag must be positive");
  require(bins > 0, "displacement_stats", "need at least one histogram bin");
  DisplacementStats st;
  st.lag_ms = lag_ms;
  for (const auto& t : trajs) {
    const double tol = t.frame_period_ms / 2.0;
    const auto& pts = t.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double gap = pts[j].timestamp_ms - pts[i].timestamp_ms;
        if (gap > lag_ms + tol) break;
        if (std::abs(gap - lag_ms) <= tol)
          st.displacements.push_back(std::hypot(pts[j].x - pts[i].x, pts[j].y - pts[i].y));
      }
    }
  }
  require(!st.displacements.empty(), "displacement_stats",
          "no point pairs separated by the requested lag");
  std::sort(st.displacements.begin(), st.displacements.end());
  st.mle_rate = exponential_rate_mle(st.displacements);
  st.degenerate = std::isinf(st.mle_rate);

  const double hi = st.displacements.back() > 0.0 ? st.displacements.back() : 1.0;
  st.histogram.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) st.histogram.bin_edges[b] = hi * b / bins;
  st.histogram.counts.assign(bins, 0);
  for (double d : st.displacements) {
    auto b = static_cast<std::size_t>(d / hi * bins);
    st.histogram.counts[std::min(b, bins - 1)]++;
  }
  return st;
}

GazeDistribution gaze_distribution(std::span<const GazeTrajectory> trajs) {
  double n = 0, sx = 0, sy = 0;
  for (const auto& t : trajs)
    for (const auto& p : t.points) {
      n += 1;
      sx += p.x;
      sy += p.y;
    }
  require(n > 0, "gaze_distribution", "no gaze points");
  GazeDistribution d;
  d.mean_x = sx / n;
  d.mean_y = sy / n;
  double vx = 0, vy = 0;
  for (const auto& t : trajs)
    for (const auto& p : t.points) {
      vx += (p.x - d.mean_x) * (p.x - d.mean_x);
      vy += (p.y - d.mean_y) * (p.y - d.mean_y);
    }
  d.std_x = std::sqrt(vx / n);
  d.std_y = std::sqrt(vy / n);
  return d;
}

void write_trajectories_jsonl(const std::filesystem::path& path,
                              std::span<const GazeTrajectory> trajs) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& t : trajs)
    for (const auto& p : t.points) {
      nlohmann::ordered_json j;
      j["video_id"] = t.video_id;
      j["clip_id"] = t.clip_id;
      j["frame_idx"] = p.frame_idx;
      j["timestamp_ms"] = p.timestamp_ms;
      j["x"] = p.x;
      j["y"] = p.y;
      os << j.dump() << '\n';
    }
}

std::vector<GazeTrajectory> read_trajectories_jsonl(const std::filesystem::path& path,
                                                    double default_period_ms) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<GazeTrajectory> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string vid = j.at("video_id").get<std::string>();
      const std::string cid = j.at("clip_id").get<std::string>();
      auto [it, inserted] = index.try_emplace({vid, cid}, out.size());
      if (inserted) out.push_back(GazeTrajectory{vid, cid, {}, default_period_ms});
      out[it->second].points.push_back({j.at("frame_idx").get<int>(),
                                        j.at("timestamp_ms").get<double>(),
                                        j.at("x").get<double>(), j.at("y").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (auto& t : out) {
    if (t.points.size() >= 2) {
      const auto& a = t.points[0];
      const auto& b = t.points[1];
      if (b.frame_idx != a.frame_idx)
        t.frame_period_ms = (b.timestamp_ms - a.timestamp_ms) / (b.frame_idx - a.frame_idx);
    }
    validate(t);
  }
  return out;
}

}  // namespace gazessl
