#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gazessl {

// Symmetric object co-occurrence counts with a zero diagonal.
struct CoocMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd counts;
  bool operator==(const CoocMatrix&) const = default;
};

void validate(const CoocMatrix& x);

struct Annotation {
  std::string image_id;
  std::vector<std::string> labels;
};

// Each image contributes 1 to (i, j) and (j, i) for every unordered pair of distinct labels it
// contains; repeated labels within an image count once.
CoocMatrix build_cooc(std::span<const Annotation> annotations,
                      const std::vector<std::string>& vocabulary);

struct GloveConfig {
  int dim = 128;
  double alpha = 0.75;
  double x_max_quantile = 0.9;
  double learning_rate = 0.05;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
};

// Tied embeddings and biases: the context vector of label i is its word vector.
struct GloveModel {
  std::vector<std::string> labels;
  Eigen::MatrixXd embeddings;  // N x dim
  Eigen::VectorXd biases;      // N
  bool operator==(const GloveModel&) const = default;
};

// min(1, (x / x_max)^alpha)
double glove_weight(double x, double x_max, double alpha);

// Linear-interpolation quantile of the positive counts in the upper triangle.
double resolve_x_max(const CoocMatrix& x, double quantile);

struct GloveLossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_embeddings;
  Eigen::VectorXd grad_biases;
};

// J = sum over ordered (i, j) with X_ij > 0 of f(X_ij) (v_i.v_j + b_i + b_j - log X_ij)^2.
GloveLossGrad glove_loss_grad(const GloveModel& model, const CoocMatrix& x,
                              const GloveConfig& cfg);
// Same objective with x_max supplied directly.
GloveLossGrad glove_loss_grad(const GloveModel& model, const CoocMatrix& x, double x_max,
                              double alpha);

GloveModel init_glove(const CoocMatrix& x, const GloveConfig& cfg);

struct GloveFit {
  GloveModel model;
  std::vector<double> epoch_loss;  // objective at init and after every epoch (epochs + 1)
};

// Full-batch AdaGrad on the tied objective.
GloveFit fit_glove(const CoocMatrix& x, const GloveConfig& cfg);
GloveModel train_glove(const CoocMatrix& x, const GloveConfig& cfg);

// Pearson r between v_i.v_j + b_i + b_j and log X_ij over unordered positive test pairs.
// Throws with fewer than two positive pairs; nullopt when either side has zero variance.
std::optional<double> validate_glove(const GloveModel& model, const CoocMatrix& x_test);

// CSV with a header row and first column of labels.
void write_cooc_csv(const std::filesystem::path& path, const CoocMatrix& x);
CoocMatrix read_cooc_csv(const std::filesystem::path& path);

// JSON-lines {"image_id": ..., "labels": [...]}.
void write_annotations_jsonl(const std::filesystem::path& path,
                             std::span<const Annotation> annotations);
std::vector<Annotation> read_annotations_jsonl(const std::filesystem::path& path);

}  // namespace gazessl
