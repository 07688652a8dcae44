#include "gazessl/rsa_cka.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "gazessl/error.hpp"
#include "gazessl/grid.hpp"

namespace gazessl {

RepMatrix aggregate_object_reps(
    const std::map<std::string, std::vector<Eigen::VectorXd>>& per_image_features) {
  require(!per_image_features.empty(), "aggregate_object_reps", "no objects");
  Eigen::Index dim = -1;
  RepMatrix out;
  out.features.resize(static_cast<Eigen::Index>(per_image_features.size()),
                      per_image_features.begin()->second.empty()
                          ? 0
                          : per_image_features.begin()->second.front().size());
  Eigen::Index row = 0;
  for (const auto& [id, vecs] : per_image_features) {
    require(!vecs.empty(), "aggregate_object_reps", "object '" + id + "' has no images");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(vecs.front().size());
    for (const auto& v : vecs) {
      if (dim < 0) dim = v.size();
      require(v.size() == dim, "aggregate_object_reps", "feature dimensions differ");
      sum += v;
    }
    out.features.row(row++) = (sum / static_cast<double>(vecs.size())).transpose();
    out.object_ids.push_back(id);
  }
  return out;
}

RepMatrix concat_layers(std::span<const RepMatrix> reps) {
  require(!reps.empty(), "concat_layers", "no layers");
  RepMatrix out;
  out.object_ids = reps.front().object_ids;
  Eigen::Index width = 0;
  for (const auto& r : reps) {
    require(r.object_ids == out.object_ids, "concat_layers", "object ids differ between layers");
    require(r.features.rows() == static_cast<Eigen::Index>(r.object_ids.size()), "concat_layers",
            "row count does not match object ids");
    width += r.features.cols();
  }
  out.features.resize(static_cast<Eigen::Index>(out.object_ids.size()), width);
  Eigen::Index col = 0;
  for (const auto& r : reps) {
    out.features.middleCols(col, r.features.cols()) = r.features;
    col += r.features.cols();
  }
  return out;
}

double linear_cka(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  require(x.rows() == y.rows(), "linear_cka", "row counts differ");
  require(x.rows() >= 2, "linear_cka", "need at least two objects");
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  const double nx = (xc.transpose() * xc).norm();
  const double ny = (yc.transpose() * yc).norm();
  require(nx > 0.0 && ny > 0.0, "linear_cka", "zero-variance representation");
  const double cross = (yc.transpose() * xc).squaredNorm();
  return std::clamp(cross / (nx * ny), 0.0, 1.0);
}

double linear_cka(const RepMatrix& x, const RepMatrix& y) {
  require(x.object_ids == y.object_ids, "linear_cka", "object ids differ");
  return linear_cka(x.features, y.features);
}

RepMatrix align_objects(const RepMatrix& reference, const RepMatrix& y) {
  require(reference.object_ids.size() == y.object_ids.size(), "align_objects",
          "object counts differ");
  std::map<std::string, Eigen::Index> pos;
  for (std::size_t i = 0; i < y.object_ids.size(); ++i)
    pos[y.object_ids[i]] = static_cast<Eigen::Index>(i);
  RepMatrix out;
  out.object_ids = reference.object_ids;
  out.features.resize(y.features.rows(), y.features.cols());
  for (std::size_t i = 0; i < reference.object_ids.size(); ++i) {
    auto it = pos.find(reference.object_ids[i]);
    require(it != pos.end(), "align_objects",
            "object '" + reference.object_ids[i] + "' missing");
    out.features.row(static_cast<Eigen::Index>(i)) = y.features.row(it->second);
  }
  return out;
}

double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "regularized_incomplete_beta", "a, b must be positive");
  require(x >= 0.0 && x <= 1.0, "regularized_incomplete_beta", "x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  // The continued fraction converges fast for x < (a + 1) / (a + b + 2); use symmetry otherwise.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_front) * h / a;
}

double student_t_cdf(double t, double dof) {
  require(dof > 0.0, "student_t_cdf", "degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

MeanStd mean_std(std::span<const double> v) {
  require(!v.empty(), "mean_std", "empty sample");
  MeanStd r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

TTestResult paired_t_test(std::span<const double> diffs) {
  require(diffs.size() >= 2, "paired_t_test", "need at least two paired samples");
  const MeanStd ms = mean_std(diffs);
  const double inf = std::numeric_limits<double>::infinity();
  if (ms.std == 0.0) {
    if (ms.mean == 0.0) return {0.0, 1.0, 0.0};
    const double s = ms.mean > 0 ? inf : -inf;
    return {s, 0.0, s};
  }
  const double n = static_cast<double>(diffs.size());
  TTestResult r;
  r.t = ms.mean / (ms.std / std::sqrt(n));
  r.cohens_d = ms.mean / ms.std;
  const double dof = n - 1.0;
  r.p = regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + r.t * r.t));
  return r;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "paired_t_test", "score lists differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return paired_t_test(d);
}

void write_rep_matrix(const std::filesystem::path& stem, const RepMatrix& rep) {
  require(rep.features.rows() == static_cast<Eigen::Index>(rep.object_ids.size()),
          "write_rep_matrix", "row count does not match object ids");
  const Grid g = grid_from_matrix(rep.features);
  write_grids(std::filesystem::path(stem.string() + ".sgrd"), std::span<const Grid>(&g, 1));
  std::ofstream os(stem.string() + ".json");
  if (!os) throw FormatError("cannot open " + stem.string() + ".json for writing");
  os << nlohmann::json{{"object_ids", rep.object_ids}}.dump() << '\n';
}

RepMatrix read_rep_matrix(const std::filesystem::path& stem) {
  RepMatrix r;
  r.features = matrix_from_grid(read_single_grid(stem.string() + ".sgrd"));
  std::ifstream is(stem.string() + ".json");
  if (!is) throw FormatError("cannot open " + stem.string() + ".json");
  try {
    r.object_ids = nlohmann::json::parse(is).at("object_ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(stem.string() + ".json: " + e.what());
  }
  if (static_cast<Eigen::Index>(r.object_ids.size()) != r.features.rows())
    throw FormatError(stem.string() + ": object id count does not match rows");
  return r;
}

}  // namespace gazessl
