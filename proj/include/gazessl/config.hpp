#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazessl/contrastive.hpp"
#include "gazessl/cooc_embed.hpp"
#include "gazessl/linear_probe.hpp"
#include "gazessl/pair_sampler.hpp"
#include "gazessl/synth_world.hpp"

namespace gazessl {

// How a frame becomes a network input: a square crop (around the gaze, at the image centre,
// or the whole frame) area-downsampled to input_size x input_size.
struct ViewSpec {
  enum class Kind { gaze_crop, center_crop, full_frame };
  Kind kind = Kind::gaze_crop;
  int crop_size = 8;
  int input_size = 8;
};

std::string to_string(ViewSpec::Kind kind);

struct CkaSettings {
  std::size_t glove_seeds = 20;
  double baseline_delta_t_ms = 0.0;  // model compared against in the paired test
};

struct ExperimentConfig {
  std::string recipe;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::size_t repeats = 1;

  WorldConfig world;
  std::size_t probe_train_videos = 12;
  std::size_t probe_test_videos = 8;
  ViewSpec view;
  SamplerConfig sampler;
  EncoderConfig encoder;
  TrainConfig training;
  ProbeConfig probe;
  GloveConfig glove;
  CkaSettings cka;
  std::vector<double> sweep;
};

inline const std::vector<std::string>& known_recipes() {
  static const std::vector<std::string> r{"slowness-sweep", "crop-sweep", "fixation-sweep",
                                          "cooc-align"};
  return r;
}

// Nested key-value text:
//   # comment
//   [section]
//   key = value
// Unknown sections/keys, malformed values and duplicates raise ConfigError carrying the
// offending line. experiment.recipe, experiment.seed and experiment.output_dir are required.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Recipe-independent checks of nested invariants (ranges, view vs image size).
void validate(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

}  // namespace gazessl
