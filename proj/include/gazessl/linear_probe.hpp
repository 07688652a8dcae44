#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gazessl {

// Multinomial logistic regression on frozen features.
struct ProbeModel {
  Eigen::MatrixXd weights;  // classes x feature_dim
  Eigen::VectorXd bias;     // classes
  Eigen::Index classes() const { return weights.rows(); }
  bool operator==(const ProbeModel&) const = default;
};

struct ProbeConfig {
  double learning_rate = 0.1;
  double l2_reg = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  int classes = 0;  // 0: one more than the largest label
};

struct ProbeFit {
  ProbeModel model;
  std::vector<double> epoch_loss;  // full objective after each epoch
};

// Mean softmax cross-entropy plus (l2_reg / 2) * |W|^2; the bias is not penalised.
double probe_objective(const ProbeModel& model, const Eigen::MatrixXd& features,
                       std::span<const int> labels, double l2_reg);

// Mini-batch gradient descent, reshuffled each epoch from the seed.
ProbeFit fit_probe(const Eigen::MatrixXd& features, std::span<const int> labels,
                   const ProbeConfig& cfg);
ProbeModel train_probe(const Eigen::MatrixXd& features, std::span<const int> labels,
                       const ProbeConfig& cfg);

Eigen::MatrixXd probe_logits(const ProbeModel& model, const Eigen::MatrixXd& features);
// Argmax over logits, smallest class index on ties.
std::vector<int> argmax_rows(const Eigen::MatrixXd& logits);
std::vector<int> predict(const ProbeModel& model, const Eigen::MatrixXd& features);
double evaluate(const ProbeModel& model, const Eigen::MatrixXd& features,
                std::span<const int> labels);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct SensitivityDelta {
  double bg_robustness = 0.0;   // acc(missing background) - acc(normal)
  double obj_reliance = 0.0;    // acc(missing object) - acc(normal)
};

SensitivityDelta sensitivity_delta(double acc_normal, double acc_missing_background,
                                   double acc_missing_object);

// Per-feature z-scoring fitted on training features. Constant features keep scale 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  static Standardizer fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

}  // namespace gazessl
