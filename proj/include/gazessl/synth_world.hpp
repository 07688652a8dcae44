#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gazessl/gaze_stream.hpp"
#include "gazessl/grid.hpp"
#include "gazessl/pair_sampler.hpp"

namespace gazessl {

// Synthetic egocentric world. Every video has one context class (rendered over the whole
// frame) and a piecewise-constant object class (rendered in a patch at the gaze location).
// The gaze fixates with small Gaussian jitter and saccades to a uniformly drawn new location
// whenever the object dwell ends. Per-frame nuisance is a random mix of nuisance_dim
// patch-sized templates, also rendered at the gaze, with per-pixel std noise_std.
struct WorldConfig {
  std::size_t n_videos = 24;
  std::size_t frames_per_video = 150;
  double frame_period_ms = 200.0;
  int image_size = 64;
  int patch_size = 8;
  int n_object_classes = 6;
  int n_context_classes = 4;
  int object_dwell_frames = 10;
  int nuisance_dim = 8;
  double noise_std = 2.0;
  double object_amplitude = 1.0;
  double context_amplitude = 0.5;
  // Probability that a dwell draws its object from the context's preferred subset
  // (objects o with o % n_context_classes == context) instead of uniformly.
  double context_affinity = 0.0;
  double fixation_jitter_px = 2.0;
  std::uint64_t seed = 11;
};

void validate(const WorldConfig& cfg);

struct LabeledFrame {
  Grid image;
  int object_class = 0;
  int context_class = 0;
  std::size_t video = 0;
  GazePoint gaze;
};

struct SynthStream {
  FrameManifest manifest;
  std::vector<LabeledFrame> frames;  // aligned with manifest.records
  std::vector<GazeTrajectory> trajectories;  // one per video
};

class SynthWorld {
 public:
  // Class templates are drawn once from the config seed.
  explicit SynthWorld(const WorldConfig& cfg);

  const WorldConfig& config() const { return cfg_; }
  SynthStream generate(std::uint64_t stream_seed, std::size_t n_videos) const;
  Grid render(int object_class, int context_class, GazeXY gaze,
              std::span<const double> nuisance_coeffs) const;
  // Admissible gaze range: the object patch always fits inside the image.
  double gaze_min() const;
  double gaze_max() const;

 private:
  WorldConfig cfg_;
  std::vector<std::vector<float>> object_templates_;     // patch_size^2 each
  std::vector<std::vector<float>> context_templates_;    // image_size^2 each
  std::vector<std::vector<float>> nuisance_templates_;   // patch_size^2 each, unit RMS
};

// SynthWorld(cfg).generate(derive_seed(cfg.seed, "stream"), cfg.n_videos)
SynthStream gen_stream(const WorldConfig& cfg);

}  // namespace gazessl
