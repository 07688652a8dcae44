#include "gazessl/cooc_embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gazessl/error.hpp"
#include "gazessl/rng.hpp"

namespace gazessl {

void validate(const CoocMatrix& x) {
  const auto n = static_cast<Eigen::Index>(x.labels.size());
  require(x.counts.rows() == n && x.counts.cols() == n, "cooc", "counts must be N x N");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(x.counts(i, i) == 0.0, "cooc", "diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      require(x.counts(i, j) >= 0.0 && std::isfinite(x.counts(i, j)), "cooc",
              "counts must be finite and non-negative");
      require(x.counts(i, j) == x.counts(j, i), "cooc", "counts must be symmetric");
    }
  }
}

CoocMatrix build_cooc(std::span<const Annotation> annotations,
                      const std::vector<std::string>& vocabulary) {
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    require(index.emplace(vocabulary[i], static_cast<Eigen::Index>(i)).second, "build_cooc",
            "duplicate vocabulary label '" + vocabulary[i] + "'");
  CoocMatrix x;
  x.labels = vocabulary;
  const auto n = static_cast<Eigen::Index>(vocabulary.size());
  x.counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& img : annotations) {
    std::set<Eigen::Index> present;
    for (const auto& l : img.labels) {
      auto it = index.find(l);
      require(it != index.end(), "build_cooc",
              "unknown label '" + l + "' in image '" + img.image_id + "'");
      present.insert(it->second);
    }
    for (auto a = present.begin(); a != present.end(); ++a)
      for (auto b = std::next(a); b != present.end(); ++b) {
        x.counts(*a, *b) += 1.0;
        x.counts(*b, *a) += 1.0;
      }
  }
  return x;
}

double glove_weight(double x, double x_max, double alpha) {
  if (x <= 0.0) return 0.0;
  return std::min(1.0, std::pow(x / x_max, alpha));
}

double resolve_x_max(const CoocMatrix& x, double quantile) {
  require(quantile > 0.0 && quantile <= 1.0, "resolve_x_max", "quantile must lie in (0, 1]");
  std::vector<double> pos;
  for (Eigen::Index i = 0; i < x.counts.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.counts.cols(); ++j)
      if (x.counts(i, j) > 0.0) pos.push_back(x.counts(i, j));
  require(!pos.empty(), "resolve_x_max", "matrix has no positive counts");
  std::sort(pos.begin(), pos.end());
  const double h = quantile * static_cast<double>(pos.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, pos.size() - 1);
  return pos[lo] + (h - static_cast<double>(lo)) * (pos[hi] - pos[lo]);
}

GloveLossGrad glove_loss_grad(const GloveModel& model, const CoocMatrix& x, double x_max,
                              double alpha) {
  const Eigen::Index n = x.counts.rows();
  require(model.embeddings.rows() == n && model.biases.size() == n, "glove_loss_grad",
          "model size does not match matrix");
  require(x_max > 0.0, "glove_loss_grad", "x_max must be positive");
  GloveLossGrad out;
  out.grad_embeddings = Eigen::MatrixXd::Zero(n, model.embeddings.cols());
  out.grad_biases = Eigen::VectorXd::Zero(n);
  bool any = false;
  // X is symmetric, so the ordered pairs (i, j) and (j, i) contribute identical terms.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double xij = x.counts(i, j);
      if (xij <= 0.0) continue;
      any = true;
      const double f = glove_weight(xij, x_max, alpha);
      const double err = model.embeddings.row(i).dot(model.embeddings.row(j)) +
                         model.biases(i) + model.biases(j) - std::log(xij);
      out.loss += 2.0 * f * err * err;
      const double g = 4.0 * f * err;
      out.grad_embeddings.row(i) += g * model.embeddings.row(j);
      out.grad_embeddings.row(j) += g * model.embeddings.row(i);
      out.grad_biases(i) += g;
      out.grad_biases(j) += g;
    }
  require(any, "glove_loss_grad", "co-occurrence matrix has no positive entries");
  return out;
}

GloveLossGrad glove_loss_grad(const GloveModel& model, const CoocMatrix& x,
                              const GloveConfig& cfg) {
  return glove_loss_grad(model, x, resolve_x_max(x, cfg.x_max_quantile), cfg.alpha);
}

GloveModel init_glove(const CoocMatrix& x, const GloveConfig& cfg) {
  require(cfg.dim > 0, "init_glove", "dim must be positive");
  const auto n = static_cast<Eigen::Index>(x.labels.size());
  GloveModel m;
  m.labels = x.labels;
  m.embeddings.resize(n, cfg.dim);
  m.biases = Eigen::VectorXd::Zero(n);
  Rng rng(derive_seed(cfg.seed, "glove-init"));
  const double a = 0.5 / cfg.dim;
  std::uniform_real_distribution<double> u(-a, a);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < cfg.dim; ++d) m.embeddings(i, d) = u(rng);
  return m;
}

GloveFit fit_glove(const CoocMatrix& x, const GloveConfig& cfg) {
  validate(x);
  require(cfg.learning_rate > 0.0, "train_glove", "learning_rate must be positive");
  const double x_max = resolve_x_max(x, cfg.x_max_quantile);
  GloveFit fit;
  fit.model = init_glove(x, cfg);
  auto& m = fit.model;
  Eigen::MatrixXd hist_e = Eigen::MatrixXd::Zero(m.embeddings.rows(), m.embeddings.cols());
  Eigen::VectorXd hist_b = Eigen::VectorXd::Zero(m.biases.size());
  constexpr double eps = 1e-8;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const GloveLossGrad g = glove_loss_grad(m, x, x_max, cfg.alpha);
    fit.epoch_loss.push_back(g.loss);
    hist_e.array() += g.grad_embeddings.array().square();
    hist_b.array() += g.grad_biases.array().square();
    m.embeddings.array() -=
        cfg.learning_rate * g.grad_embeddings.array() / (hist_e.array() + eps).sqrt();
    m.biases.array() -= cfg.learning_rate * g.grad_biases.array() / (hist_b.array() + eps).sqrt();
  }
  fit.epoch_loss.push_back(glove_loss_grad(m, x, x_max, cfg.alpha).loss);
  return fit;
}

GloveModel train_glove(const CoocMatrix& x, const GloveConfig& cfg) {
  return fit_glove(x, cfg).model;
}

std::optional<double> validate_glove(const GloveModel& model, const CoocMatrix& x_test) {
  const Eigen::Index n = x_test.counts.rows();
  require(model.embeddings.rows() == n && model.biases.size() == n, "validate_glove",
          "model size does not match test matrix");
  std::vector<double> pred, target;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (x_test.counts(i, j) > 0.0) {
        pred.push_back(model.embeddings.row(i).dot(model.embeddings.row(j)) + model.biases(i) +
                       model.biases(j));
        target.push_back(std::log(x_test.counts(i, j)));
      }
  require(pred.size() >= 2, "validate_glove", "need at least two positive test pairs");
  const auto k = static_cast<double>(pred.size());
  double mp = 0, mt = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) mp += pred[i], mt += target[i];
  mp /= k;
  mt /= k;
  double spp = 0, stt = 0, spt = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    stt += (target[i] - mt) * (target[i] - mt);
    spt += (pred[i] - mp) * (target[i] - mt);
  }
  if (!(spp > 0.0) || !(stt > 0.0)) return std::nullopt;
  return std::clamp(spt / std::sqrt(spp * stt), -1.0, 1.0);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_cooc_csv(const std::filesystem::path& path, const CoocMatrix& x) {
  validate(x);
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.precision(17);
  for (const auto& l : x.labels) os << ',' << l;
  os << '\n';
  for (std::size_t i = 0; i < x.labels.size(); ++i) {
    os << x.labels[i];
    for (std::size_t j = 0; j < x.labels.size(); ++j)
      os << ',' << x.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    os << '\n';
  }
}

CoocMatrix read_cooc_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": empty file");
  auto header = split_csv(line);
  if (header.empty()) throw FormatError(path.string() + ":1: empty header");
  CoocMatrix x;
  x.labels.assign(header.begin() + 1, header.end());
  const auto n = static_cast<Eigen::Index>(x.labels.size());
  x.counts = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 2) + ": ";
    if (!std::getline(is, line)) throw FormatError(where + "missing row");
    auto cells = split_csv(line);
    if (static_cast<Eigen::Index>(cells.size()) != n + 1) throw FormatError(where + "bad width");
    if (cells[0] != x.labels[static_cast<std::size_t>(i)])
      throw FormatError(where + "row label does not match header");
    for (Eigen::Index j = 0; j < n; ++j) {
      try {
        std::size_t used = 0;
        x.counts(i, j) = std::stod(cells[static_cast<std::size_t>(j + 1)], &used);
        if (used != cells[static_cast<std::size_t>(j + 1)].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw FormatError(where + "bad number in column " + std::to_string(j + 2));
      }
    }
  }
  try {
    validate(x);
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return x;
}

void write_annotations_jsonl(const std::filesystem::path& path,
                             std::span<const Annotation> annotations) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& a : annotations) {
    nlohmann::ordered_json j;
    j["image_id"] = a.image_id;
    j["labels"] = a.labels;
    os << j.dump() << '\n';
  }
}

std::vector<Annotation> read_annotations_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<Annotation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("image_id").get<std::string>(),
                     j.at("labels").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace gazessl
