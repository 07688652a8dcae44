#include "gazessl/synth_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazessl/error.hpp"
#include "gazessl/rng.hpp"

namespace gazessl {

namespace {

std::vector<float> gaussian_template(std::size_t n, double amplitude, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<float> t(n);
  for (auto& v : t) v = static_cast<float>(amplitude * g(rng));
  return t;
}

std::string padded(const char* prefix, std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, v);
  return buf;
}

}  // namespace

void validate(const WorldConfig& cfg) {
  require(cfg.n_videos > 0 && cfg.frames_per_video > 0, "WorldConfig",
          "video and frame counts must be positive");
  require(cfg.frame_period_ms > 0.0, "WorldConfig", "frame_period_ms must be positive");
  require(cfg.image_size > 0 && cfg.patch_size > 0, "WorldConfig", "sizes must be positive");
  require(cfg.patch_size <= cfg.image_size, "WorldConfig", "patch larger than image");
  require(cfg.n_object_classes > 0 && cfg.n_context_classes > 0, "WorldConfig",
          "class counts must be positive");
  require(cfg.object_dwell_frames > 0, "WorldConfig", "object_dwell_frames must be positive");
  require(cfg.nuisance_dim > 0, "WorldConfig", "nuisance_dim must be positive");
  require(cfg.noise_std >= 0.0, "WorldConfig", "noise_std must be non-negative");
  require(cfg.context_affinity >= 0.0 && cfg.context_affinity <= 1.0, "WorldConfig",
          "context_affinity must lie in [0, 1]");
  require(cfg.fixation_jitter_px >= 0.0, "WorldConfig", "fixation_jitter_px must be >= 0");
}

SynthWorld::SynthWorld(const WorldConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  Rng rng(derive_seed(cfg_.seed, "templates"));
  const auto patch = static_cast<std::size_t>(cfg_.patch_size * cfg_.patch_size);
  const auto image = static_cast<std::size_t>(cfg_.image_size * cfg_.image_size);
  for (int c = 0; c < cfg_.n_object_classes; ++c)
    object_templates_.push_back(gaussian_template(patch, cfg_.object_amplitude, rng));
  for (int c = 0; c < cfg_.n_context_classes; ++c)
    context_templates_.push_back(gaussian_template(image, cfg_.context_amplitude, rng));
  for (int j = 0; j < cfg_.nuisance_dim; ++j) {
    auto t = gaussian_template(patch, 1.0, rng);
    double ss = 0.0;
    for (float v : t) ss += static_cast<double>(v) * v;
    const double rms = std::sqrt(ss / static_cast<double>(patch));
    for (auto& v : t) v = static_cast<float>(v / rms);
    nuisance_templates_.push_back(std::move(t));
  }
}

double SynthWorld::gaze_min() const { return cfg_.patch_size / 2.0; }

double SynthWorld::gaze_max() const {
  // Largest gaze whose rounded patch placement still fits; keep strictly inside the image.
  return cfg_.image_size - cfg_.patch_size / 2.0 - 0.5;
}

Grid SynthWorld::render(int object_class, int context_class, GazeXY gaze,
                        std::span<const double> nuisance_coeffs) const {
  require(object_class >= 0 && object_class < cfg_.n_object_classes, "render",
          "object class out of range");
  require(context_class >= 0 && context_class < cfg_.n_context_classes, "render",
          "context class out of range");
  require(nuisance_coeffs.size() == nuisance_templates_.size(), "render",
          "one coefficient per nuisance template required");
  const auto s = static_cast<std::uint32_t>(cfg_.image_size);
  Grid g(s, s);
  const auto& ctx = context_templates_[static_cast<std::size_t>(context_class)];
  std::copy(ctx.begin(), ctx.end(), g.values.begin());

  const CropWindow w = crop_window(gaze, cfg_.patch_size, cfg_.image_size, cfg_.image_size);
  const auto& obj = object_templates_[static_cast<std::size_t>(object_class)];
  const auto p = static_cast<std::size_t>(cfg_.patch_size);
  for (std::size_t y = 0; y < p; ++y)
    for (std::size_t x = 0; x < p; ++x) {
      const std::size_t k = y * p + x;
      double v = obj[k];
      for (std::size_t j = 0; j < nuisance_templates_.size(); ++j)
        v += nuisance_coeffs[j] * nuisance_templates_[j][k];
      g.at(static_cast<std::uint32_t>(w.left) + static_cast<std::uint32_t>(x),
           static_cast<std::uint32_t>(w.top) + static_cast<std::uint32_t>(y)) +=
          static_cast<float>(v);
    }
  return g;
}

SynthStream SynthWorld::generate(std::uint64_t stream_seed, std::size_t n_videos) const {
  SynthStream out;
  const auto frames = cfg_.frames_per_video;
  out.frames.reserve(n_videos * frames);
  out.manifest.records.reserve(n_videos * frames);
  const double lo = gaze_min();
  const double hi = gaze_max();
  const double coeff_std = cfg_.noise_std / std::sqrt(static_cast<double>(cfg_.nuisance_dim));
  std::vector<double> coeffs(static_cast<std::size_t>(cfg_.nuisance_dim), 0.0);

  for (std::size_t v = 0; v < n_videos; ++v) {
    Rng rng(derive_seed(stream_seed, v));
    std::uniform_int_distribution<int> pick_ctx(0, cfg_.n_context_classes - 1);
    std::uniform_int_distribution<int> pick_obj(0, cfg_.n_object_classes - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> place(lo, hi);
    std::normal_distribution<double> jitter(0.0, cfg_.fixation_jitter_px);
    std::normal_distribution<double> nuisance(0.0, 1.0);

    const int context = pick_ctx(rng);
    std::vector<int> preferred;
    for (int o = context % cfg_.n_object_classes; o < cfg_.n_object_classes;
         o += cfg_.n_context_classes)
      preferred.push_back(o);

    GazeTrajectory traj{padded("v", v), "c0000", {}, cfg_.frame_period_ms};
    int object = 0;
    GazeXY centre;
    for (std::size_t t = 0; t < frames; ++t) {
      if (t % static_cast<std::size_t>(cfg_.object_dwell_frames) == 0) {
        if (unit(rng) < cfg_.context_affinity) {
          std::uniform_int_distribution<std::size_t> pp(0, preferred.size() - 1);
          object = preferred[pp(rng)];
        } else {
          object = pick_obj(rng);
        }
        centre = {place(rng), place(rng)};
      }
      GazeXY gaze{std::clamp(centre.x + jitter(rng), lo, hi),
                  std::clamp(centre.y + jitter(rng), lo, hi)};
      for (auto& c : coeffs) c = coeff_std * nuisance(rng);

      LabeledFrame f;
      f.image = render(object, context, gaze, coeffs);
      f.object_class = object;
      f.context_class = context;
      f.video = v;
      f.gaze = {static_cast<int>(t), static_cast<double>(t) * cfg_.frame_period_ms, gaze.x, gaze.y};
      traj.points.push_back(f.gaze);
      out.manifest.records.push_back({traj.video_id, traj.clip_id, f.gaze.frame_idx,
                                      f.gaze.timestamp_ms,
                                      traj.video_id + "/" + padded("f", t)});
      out.frames.push_back(std::move(f));
    }
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

SynthStream gen_stream(const WorldConfig& cfg) {
  return SynthWorld(cfg).generate(derive_seed(cfg.seed, "stream"), cfg.n_videos);
}

}  // namespace gazessl
