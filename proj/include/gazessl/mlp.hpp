#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gazessl/rng.hpp"

namespace gazessl {

enum class Activation { identity, relu };

// Affine layer y = act(x W^T + b); samples are rows.
struct Dense {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::identity;
  bool operator==(const Dense&) const = default;
};

struct Mlp {
  std::vector<Dense> layers;

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  std::size_t parameter_count() const;
  bool same_shape(const Mlp& other) const;
  bool operator==(const Mlp&) const = default;
};

// activations[0] is the input batch; activations[l + 1] is layer l's post-activation output.
struct MlpTrace {
  std::vector<Eigen::MatrixXd> activations;
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

// Glorot-uniform weights, zero biases. dims = {in, h1, ..., out}; acts[l] is layer l's
// activation.
Mlp init_mlp(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts,
             Rng& rng);

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& batch);
MlpTrace forward_trace(const Mlp& net, const Eigen::MatrixXd& batch);

// Gradient of a scalar loss w.r.t. all parameters, given dLoss/dOutput. Returned with the
// same shapes as `net`.
Mlp backward(const Mlp& net, const MlpTrace& trace, const Eigen::MatrixXd& grad_output);

// Parameter-space helpers.
double squared_distance(const Mlp& a, const Mlp& b);
void axpy(double alpha, const Mlp& x, Mlp& y);  // y += alpha * x
void scale(Mlp& net, double s);

}  // namespace gazessl
