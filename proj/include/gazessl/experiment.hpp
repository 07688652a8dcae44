#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gazessl/config.hpp"
#include "gazessl/contrastive.hpp"
#include "gazessl/linear_probe.hpp"
#include "gazessl/synth_world.hpp"

namespace gazessl {

// Flattened network inputs for every frame of a stream under the given view.
Eigen::MatrixXd view_matrix(const SynthStream& stream, const ViewSpec& view);
Eigen::RowVectorXd view_vector(const LabeledFrame& frame, const ViewSpec& view);

std::vector<int> object_labels(const SynthStream& stream);
std::vector<int> context_labels(const SynthStream& stream);

// Training stream plus two held-out streams (probe fit / probe test) from one world.
struct WorldData {
  SynthStream train;
  SynthStream probe_train;
  SynthStream probe_test;
};

WorldData make_world_data(const WorldConfig& world, std::size_t probe_train_videos,
                          std::size_t probe_test_videos);

struct ProbeScores {
  double object_acc = 0.0;
  double context_acc = 0.0;
};

// Linear probes on standardized frozen backbone features.
ProbeScores probe_scores(const Eigen::MatrixXd& train_features, const SynthStream& train,
                         const Eigen::MatrixXd& test_features, const SynthStream& test,
                         const ProbeConfig& cfg);

struct PointResult {
  ProbeScores scores;
  double initial_loss = 0.0;  // mean over the first 5% of steps
  double final_loss = 0.0;    // mean over the last 5% of steps
  TrainResult training;
};

// Trains one SSL model on the world's training stream and probes it.
PointResult run_point(const WorldData& data, const ViewSpec& view, const SamplerConfig& sampler,
                      const EncoderConfig& encoder, const TrainConfig& training,
                      const ProbeConfig& probe);

// Per-module seeds fanned out from the global experiment seed.
struct SeedPlan {
  std::uint64_t world;
  std::uint64_t sampler;
  std::uint64_t training;
  std::uint64_t probe;
  std::uint64_t glove;
};
SeedPlan plan_seeds(std::uint64_t global_seed);

// Runs the configured recipe, writing metrics CSVs, checkpoints, results.csv and
// summary.json under cfg.output_dir. Returns the summary document.
nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg);

}  // namespace gazessl
