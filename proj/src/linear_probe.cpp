#include "gazessl/linear_probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gazessl/error.hpp"
#include "gazessl/rng.hpp"

namespace gazessl {

namespace {

void check_labels(const Eigen::MatrixXd& features, std::span<const int> labels) {
  require(features.rows() == static_cast<Eigen::Index>(labels.size()), "probe",
          "feature rows != label count");
  for (int y : labels) require(y >= 0, "probe", "labels must be non-negative");
}

// Row-wise softmax probabilities; returns summed cross-entropy of the given labels.
double softmax_rows(Eigen::MatrixXd& logits, std::span<const int> labels) {
  double ce = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - mx).exp();
    const double z = logits.row(r).sum();
    logits.row(r) /= z;
    const int y = labels[static_cast<std::size_t>(r)];
    ce -= std::log(std::max(logits(r, y), 1e-300));
  }
  return ce;
}

}  // namespace

Eigen::MatrixXd probe_logits(const ProbeModel& model, const Eigen::MatrixXd& features) {
  require(features.cols() == model.weights.cols(), "probe",
          "feature dim " + std::to_string(features.cols()) + " != model dim " +
              std::to_string(model.weights.cols()));
  Eigen::MatrixXd z = features * model.weights.transpose();
  z.rowwise() += model.bias.transpose();
  return z;
}

double probe_objective(const ProbeModel& model, const Eigen::MatrixXd& features,
                       std::span<const int> labels, double l2_reg) {
  check_labels(features, labels);
  for (int y : labels) require(y < model.classes(), "probe", "label outside model classes");
  Eigen::MatrixXd p = probe_logits(model, features);
  const double ce = softmax_rows(p, labels);
  return ce / static_cast<double>(labels.size()) + 0.5 * l2_reg * model.weights.squaredNorm();
}

ProbeFit fit_probe(const Eigen::MatrixXd& features, std::span<const int> labels,
                   const ProbeConfig& cfg) {
  check_labels(features, labels);
  require(cfg.learning_rate > 0.0 && cfg.l2_reg >= 0.0 && cfg.batch_size > 0, "train_probe",
          "invalid probe config");
  const int max_label = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
  const int classes = cfg.classes > 0 ? cfg.classes : max_label + 1;
  require(max_label < classes, "train_probe", "label exceeds configured class count");
  const bool multi = std::any_of(labels.begin(), labels.end(),
                                 [&](int y) { return y != labels.front(); });
  require(multi && classes >= 2, "train_probe", "need at least two distinct classes");
  require(features.rows() >= classes, "train_probe", "fewer samples than classes");

  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  ProbeFit fit;
  fit.model.weights = Eigen::MatrixXd::Zero(classes, d);
  fit.model.bias = Eigen::VectorXd::Zero(classes);

  Rng rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto bs = static_cast<Eigen::Index>(cfg.batch_size);
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += bs) {
      const Eigen::Index m = std::min(bs, n - start);
      Eigen::MatrixXd xb(m, d);
      batch_labels.resize(static_cast<std::size_t>(m));
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = features.row(src);
        batch_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
      }
      Eigen::MatrixXd g = probe_logits(fit.model, xb);
      softmax_rows(g, batch_labels);
      for (Eigen::Index i = 0; i < m; ++i) g(i, batch_labels[static_cast<std::size_t>(i)]) -= 1.0;
      g /= static_cast<double>(m);
      const Eigen::MatrixXd gw = g.transpose() * xb + cfg.l2_reg * fit.model.weights;
      fit.model.weights -= cfg.learning_rate * gw;
      fit.model.bias -= cfg.learning_rate * g.colwise().sum().transpose();
    }
    fit.epoch_loss.push_back(probe_objective(fit.model, features, labels, cfg.l2_reg));
  }
  return fit;
}

ProbeModel train_probe(const Eigen::MatrixXd& features, std::span<const int> labels,
                       const ProbeConfig& cfg) {
  return fit_probe(features, labels, cfg).model;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const ProbeModel& model, const Eigen::MatrixXd& features) {
  return argmax_rows(probe_logits(model, features));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require(predictions.size() == labels.size() && !labels.empty(), "accuracy",
          "prediction/label size mismatch or empty");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double evaluate(const ProbeModel& model, const Eigen::MatrixXd& features,
                std::span<const int> labels) {
  check_labels(features, labels);
  return accuracy(predict(model, features), labels);
}

SensitivityDelta sensitivity_delta(double acc_normal, double acc_missing_background,
                                   double acc_missing_object) {
  return {acc_missing_background - acc_normal, acc_missing_object - acc_normal};
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& features) {
  require(features.rows() > 0, "Standardizer", "no samples");
  Standardizer s;
  s.mean = features.colwise().mean();
  const Eigen::MatrixXd c = features.rowwise() - s.mean;
  s.scale = (c.colwise().squaredNorm() / static_cast<double>(features.rows())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
  require(features.cols() == mean.size(), "Standardizer", "dimension mismatch");
  return (features.rowwise() - mean).array().rowwise() / scale.array();
}

}  // namespace gazessl
