#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gazessl/mlp.hpp"
#include "gazessl/pair_sampler.hpp"

namespace gazessl {

// Backbone (hidden_dims; ReLU except for a linear last layer) followed by a projector: ReLU
// layer of proj_hidden_dim, then a linear layer to embed_dim. Defaults are the full-scale projector sizes.
struct EncoderConfig {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden_dims;
  Eigen::Index embed_dim = 256;
  Eigen::Index proj_hidden_dim = 4096;
  Activation activation = Activation::relu;
};

void validate(const EncoderConfig& cfg);

// Index of the network layer whose output is the frozen backbone feature.
std::size_t feature_layer(const EncoderConfig& cfg);

struct ModelParams {
  Mlp theta_q;  // query encoder + projector
  Mlp theta_k;  // momentum encoder + projector
  bool operator==(const ModelParams&) const = default;
};

struct TrainConfig {
  double tau = 0.1;
  double momentum_m = 0.996;
  double learning_rate = 0.05;
  double weight_decay = 1e-6;
  std::size_t batch_size = 128;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  double augment_noise_std = 0.0;
  bool symmetrize_loss = false;
};

void validate(const TrainConfig& cfg);

ModelParams init_model(const EncoderConfig& cfg, std::uint64_t seed);

struct InfoNceResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_q;
  Eigen::MatrixXd grad_k;
  double pos_top1 = 0.0;  // fraction of queries whose positive key has the highest similarity
};

// Mean over rows of -log softmax_t(sim(q_t, k_.)/tau) at the matching key, with cosine
// similarity and all batch keys as the candidate set.
InfoNceResult info_nce(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, double tau);

// theta_k <- m * theta_k + (1 - m) * theta_q, entrywise.
void ema_update(Mlp& theta_k, const Mlp& theta_q, double m);

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  double pos_top1 = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<StepMetrics> history;
};

// Payload row i is the flattened input for manifest record i.
TrainResult train(const FrameManifest& manifest, const Eigen::MatrixXd& payloads,
                  const SamplerConfig& sampler_cfg, const EncoderConfig& enc_cfg,
                  const TrainConfig& train_cfg, const FixationMap* fixations = nullptr);

// Backbone features of the query encoder for a batch of inputs.
Eigen::MatrixXd encode_features(const Mlp& net, const EncoderConfig& cfg,
                                const Eigen::MatrixXd& batch);
// Every ReLU backbone layer's activations, in depth order.
std::vector<Eigen::MatrixXd> encode_layers(const Mlp& net, const EncoderConfig& cfg,
                                           const Eigen::MatrixXd& batch);

void write_metrics_csv(const std::string& path, const std::vector<StepMetrics>& history);

}  // namespace gazessl
