#include "gazessl/mlp.hpp"

#include <cmath>

#include "gazessl/error.hpp"

namespace gazessl {

Eigen::Index Mlp::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }

Eigen::Index Mlp::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::same_shape(const Mlp& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size() || a.activation != b.activation)
      return false;
  }
  return true;
}

Mlp init_mlp(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts,
             Rng& rng) {
  require(dims.size() >= 2, "init_mlp", "need at least input and output dims");
  require(acts.size() == dims.size() - 1, "init_mlp", "one activation per layer");
  Mlp net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Eigen::Index in = dims[l];
    const Eigen::Index out = dims[l + 1];
    require(in > 0 && out > 0, "init_mlp", "layer dimensions must be positive");
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-a, a);
    Dense d;
    d.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) d.weight(r, c) = u(rng);
    d.bias = Eigen::VectorXd::Zero(out);
    d.activation = acts[l];
    net.layers.push_back(std::move(d));
  }
  return net;
}

MlpTrace forward_trace(const Mlp& net, const Eigen::MatrixXd& batch) {
  require(!net.layers.empty(), "forward", "network has no layers");
  require(batch.cols() == net.input_dim(), "forward",
          "batch width " + std::to_string(batch.cols()) + " != input dim " +
              std::to_string(net.input_dim()));
  MlpTrace tr;
  tr.activations.reserve(net.layers.size() + 1);
  tr.activations.push_back(batch);
  for (const auto& l : net.layers) {
    Eigen::MatrixXd z = tr.activations.back() * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (l.activation == Activation::relu) z = z.cwiseMax(0.0);
    tr.activations.push_back(std::move(z));
  }
  return tr;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& batch) {
  return forward_trace(net, batch).output();
}

Mlp backward(const Mlp& net, const MlpTrace& trace, const Eigen::MatrixXd& grad_output) {
  require(trace.activations.size() == net.layers.size() + 1, "backward", "trace/net mismatch");
  require(grad_output.rows() == trace.output().rows() &&
              grad_output.cols() == trace.output().cols(),
          "backward", "gradient shape does not match network output");
  Mlp grad = net;
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    const auto& l = net.layers[i];
    if (l.activation == Activation::relu)
      delta = (trace.activations[i + 1].array() > 0.0).select(delta, 0.0);
    grad.layers[i].weight = delta.transpose() * trace.activations[i];
    grad.layers[i].bias = delta.colwise().sum().transpose();
    if (i > 0) delta = delta * l.weight;
  }
  return grad;
}

double squared_distance(const Mlp& a, const Mlp& b) {
  require(a.same_shape(b), "squared_distance", "shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    s += (a.layers[i].weight - b.layers[i].weight).squaredNorm();
    s += (a.layers[i].bias - b.layers[i].bias).squaredNorm();
  }
  return s;
}

void axpy(double alpha, const Mlp& x, Mlp& y) {
  require(x.same_shape(y), "axpy", "shape mismatch");
  for (std::size_t i = 0; i < x.layers.size(); ++i) {
    y.layers[i].weight += alpha * x.layers[i].weight;
    y.layers[i].bias += alpha * x.layers[i].bias;
  }
}

void scale(Mlp& net, double s) {
  for (auto& l : net.layers) {
    l.weight *= s;
    l.bias *= s;
  }
}

}  // namespace gazessl
