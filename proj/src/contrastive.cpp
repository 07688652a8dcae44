#include "gazessl/contrastive.hpp"

#include <cmath>
#include <fstream>

#include "gazessl/error.hpp"

namespace gazessl {

namespace {

constexpr double kNormFloor = 1e-12;

struct Normalized {
  Eigen::MatrixXd unit;
  Eigen::VectorXd norms;  // floored
};

Normalized normalize_rows(const Eigen::MatrixXd& m, const char* which) {
  Normalized n;
  n.norms.resize(m.rows());
  n.unit.resize(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    require(norm > 0.0 && std::isfinite(norm), "info_nce",
            std::string("zero-norm or non-finite row in ") + which);
    n.norms(r) = std::max(norm, kNormFloor);
    n.unit.row(r) = m.row(r) / n.norms(r);
  }
  return n;
}

// Gradient through x -> x / |x| given dLoss/d(unit).
Eigen::MatrixXd unnormalize_grad(const Normalized& n, const Eigen::MatrixXd& g_unit) {
  Eigen::MatrixXd g(g_unit.rows(), g_unit.cols());
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    const double radial = n.unit.row(r).dot(g_unit.row(r));
    g.row(r) = (g_unit.row(r) - radial * n.unit.row(r)) / n.norms(r);
  }
  return g;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& src, const std::vector<PairSpec>& pairs,
                            bool keys) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pairs.size()), src.cols());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        src.row(static_cast<Eigen::Index>(keys ? pairs[i].key_idx : pairs[i].query_idx));
  return out;
}

void add_noise(Eigen::MatrixXd& m, double stddev, Rng& rng) {
  if (stddev <= 0.0) return;
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) += n(rng);
}

}  // namespace

void validate(const EncoderConfig& cfg) {
  require(cfg.input_dim > 0, "EncoderConfig", "input_dim must be positive");
  for (auto h : cfg.hidden_dims) require(h > 0, "EncoderConfig", "hidden dims must be positive");
  require(cfg.embed_dim > 0 && cfg.proj_hidden_dim > 0, "EncoderConfig",
          "projector dims must be positive");
  require(cfg.activation == Activation::relu, "EncoderConfig", "only relu is supported");
}

std::size_t feature_layer(const EncoderConfig& cfg) { return cfg.hidden_dims.size(); }

void validate(const TrainConfig& cfg) {
  require(cfg.tau > 0.0, "TrainConfig", "tau must be positive");
  require(cfg.momentum_m >= 0.0 && cfg.momentum_m <= 1.0, "TrainConfig",
          "momentum must lie in [0, 1]");
  require(cfg.learning_rate > 0.0, "TrainConfig", "learning_rate must be positive");
  require(cfg.weight_decay >= 0.0, "TrainConfig", "weight_decay must be non-negative");
  require(cfg.batch_size > 0, "TrainConfig", "batch_size must be positive");
  require(cfg.augment_noise_std >= 0.0, "TrainConfig", "augment_noise_std must be >= 0");
}

ModelParams init_model(const EncoderConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::vector<Eigen::Index> dims{cfg.input_dim};
  std::vector<Activation> acts;
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    dims.push_back(cfg.hidden_dims[i]);
    // The last backbone layer is a linear bottleneck: a ReLU there can switch off every unit
    // for some inputs, and an all-zero embedding has no defined cosine similarity.
    acts.push_back(i + 1 == cfg.hidden_dims.size() ? Activation::identity : cfg.activation);
  }
  dims.push_back(cfg.proj_hidden_dim);
  acts.push_back(cfg.activation);
  dims.push_back(cfg.embed_dim);
  acts.push_back(Activation::identity);
  Rng rng(seed);
  ModelParams p;
  p.theta_q = init_mlp(dims, acts, rng);
  p.theta_k = p.theta_q;
  return p;
}

InfoNceResult info_nce(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, double tau) {
  require(q.rows() >= 1, "info_nce", "empty batch");
  require(q.rows() == k.rows() && q.cols() == k.cols(), "info_nce", "q/k shape mismatch");
  require(tau > 0.0, "info_nce", "tau must be positive");
  const Eigen::Index b = q.rows();
  const Normalized qn = normalize_rows(q, "q");
  const Normalized kn = normalize_rows(k, "k");

  const Eigen::MatrixXd logits = (qn.unit * kn.unit.transpose()) / tau;
  Eigen::MatrixXd dlogits(b, b);
  InfoNceResult res;
  std::size_t hits = 0;
  for (Eigen::Index t = 0; t < b; ++t) {
    Eigen::Index arg = 0;
    const double mx = logits.row(t).maxCoeff(&arg);
    const Eigen::RowVectorXd e = (logits.row(t).array() - mx).exp();
    const double z = e.sum();
    res.loss += mx + std::log(z) - logits(t, t);
    dlogits.row(t) = e / z;
    dlogits(t, t) -= 1.0;
    if (arg == t) ++hits;
  }
  res.loss /= static_cast<double>(b);
  res.pos_top1 = static_cast<double>(hits) / static_cast<double>(b);
  dlogits /= static_cast<double>(b) * tau;

  res.grad_q = unnormalize_grad(qn, dlogits * kn.unit);
  res.grad_k = unnormalize_grad(kn, dlogits.transpose() * qn.unit);
  return res;
}

void ema_update(Mlp& theta_k, const Mlp& theta_q, double m) {
  require(m >= 0.0 && m <= 1.0, "ema_update", "momentum must lie in [0, 1]");
  require(theta_k.same_shape(theta_q), "ema_update", "parameter shapes differ");
  for (std::size_t i = 0; i < theta_k.layers.size(); ++i) {
    auto& k = theta_k.layers[i];
    const auto& q = theta_q.layers[i];
    k.weight = m * k.weight + (1.0 - m) * q.weight;
    k.bias = m * k.bias + (1.0 - m) * q.bias;
  }
}

namespace {

// InfoNCE over the pairs whose embeddings are both non-zero. An exactly-zero embedding arises
// when every projector unit is inactive for that input; its cosine is undefined and its
// gradient through the inactive units is zero, so the pair is left out of this step.
InfoNceResult live_info_nce(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, double tau) {
  std::vector<Eigen::Index> live;
  for (Eigen::Index r = 0; r < q.rows(); ++r)
    if (!q.row(r).isZero(0.0) && !k.row(r).isZero(0.0)) live.push_back(r);
  if (live.size() == static_cast<std::size_t>(q.rows())) return info_nce(q, k, tau);
  require(!live.empty(), "train", "every embedding in the batch is zero; the encoder has died");
  const auto n = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd ql(n, q.cols()), kl(n, k.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    ql.row(i) = q.row(live[static_cast<std::size_t>(i)]);
    kl.row(i) = k.row(live[static_cast<std::size_t>(i)]);
  }
  const InfoNceResult sub = info_nce(ql, kl, tau);
  InfoNceResult out{sub.loss, Eigen::MatrixXd::Zero(q.rows(), q.cols()),
                    Eigen::MatrixXd::Zero(k.rows(), k.cols()), sub.pos_top1};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.grad_q.row(live[static_cast<std::size_t>(i)]) = sub.grad_q.row(i);
    out.grad_k.row(live[static_cast<std::size_t>(i)]) = sub.grad_k.row(i);
  }
  return out;
}

}  // namespace

TrainResult train(const FrameManifest& manifest, const Eigen::MatrixXd& payloads,
                  const SamplerConfig& sampler_cfg, const EncoderConfig& enc_cfg,
                  const TrainConfig& train_cfg, const FixationMap* fixations) {
  validate(train_cfg);
  require(payloads.rows() == static_cast<Eigen::Index>(manifest.records.size()), "train",
          "one payload row per manifest record required");
  require(payloads.cols() == enc_cfg.input_dim, "train", "payload width != encoder input_dim");

  TrainResult out;
  out.params = init_model(enc_cfg, derive_seed(train_cfg.seed, "init"));
  if (train_cfg.steps == 0) return out;

  const PairSampler sampler(manifest, sampler_cfg, fixations);
  Rng pair_rng(sampler_cfg.seed);
  Rng noise_rng(derive_seed(train_cfg.seed, "augment"));
  auto& p = out.params;
  out.history.reserve(train_cfg.steps);

  for (std::size_t step = 0; step < train_cfg.steps; ++step) {
    const auto pairs = sampler.sample(train_cfg.batch_size, pair_rng);
    Eigen::MatrixXd xq = gather_rows(payloads, pairs, false);
    Eigen::MatrixXd xk = gather_rows(payloads, pairs, true);
    add_noise(xq, train_cfg.augment_noise_std, noise_rng);
    add_noise(xk, train_cfg.augment_noise_std, noise_rng);

    const MlpTrace tq = forward_trace(p.theta_q, xq);
    const InfoNceResult r = live_info_nce(tq.output(), forward(p.theta_k, xk), train_cfg.tau);
    Mlp grad = backward(p.theta_q, tq, r.grad_q);
    StepMetrics m{step, r.loss, r.pos_top1};

    if (train_cfg.symmetrize_loss) {
      const MlpTrace tq2 = forward_trace(p.theta_q, xk);
      const InfoNceResult r2 = live_info_nce(tq2.output(), forward(p.theta_k, xq), train_cfg.tau);
      axpy(1.0, backward(p.theta_q, tq2, r2.grad_q), grad);
      scale(grad, 0.5);
      m.loss = 0.5 * (r.loss + r2.loss);
      m.pos_top1 = 0.5 * (r.pos_top1 + r2.pos_top1);
    }

    // Decoupled weight decay on weights; biases are not decayed.
    const double lr = train_cfg.learning_rate;
    for (std::size_t l = 0; l < p.theta_q.layers.size(); ++l) {
      auto& layer = p.theta_q.layers[l];
      layer.weight *= 1.0 - lr * train_cfg.weight_decay;
      layer.weight -= lr * grad.layers[l].weight;
      layer.bias -= lr * grad.layers[l].bias;
    }
    ema_update(p.theta_k, p.theta_q, train_cfg.momentum_m);
    out.history.push_back(m);
  }
  return out;
}

Eigen::MatrixXd encode_features(const Mlp& net, const EncoderConfig& cfg,
                                const Eigen::MatrixXd& batch) {
  const std::size_t depth = feature_layer(cfg);
  require(depth < net.layers.size(), "encode_features", "network shallower than backbone");
  require(batch.cols() == net.input_dim(), "encode_features", "batch width != input dim");
  Eigen::MatrixXd h = batch;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = net.layers[l];
    Eigen::MatrixXd z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    h = layer.activation == Activation::relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return h;
}

std::vector<Eigen::MatrixXd> encode_layers(const Mlp& net, const EncoderConfig& cfg,
                                           const Eigen::MatrixXd& batch) {
  const std::size_t depth = feature_layer(cfg);
  require(depth >= 1 && depth < net.layers.size(), "encode_layers", "no backbone layers");
  const MlpTrace tr = forward_trace(net, batch);
  return {tr.activations.begin() + 1,
          tr.activations.begin() + 1 + static_cast<std::ptrdiff_t>(depth)};
}

void write_metrics_csv(const std::string& path, const std::vector<StepMetrics>& history) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << "step,loss,pos_top1\n";
  os.precision(17);
  for (const auto& m : history) os << m.step << ',' << m.loss << ',' << m.pos_top1 << '\n';
}

}  // namespace gazessl
