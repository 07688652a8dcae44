#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gazessl/cooc_embed.hpp"
#include "gazessl/error.hpp"
#include "oracles.hpp"
#include "two_block.hpp"

using namespace gazessl;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("build_cooc counting with set semantics") {
  const std::vector<Annotation> ann{{"1", {"a", "b"}}, {"2", {"a", "b"}}, {"3", {"a", "c"}}};
  const CoocMatrix x = build_cooc(ann, {"a", "b", "c"});
  CHECK(x.counts(0, 1) == 2);
  CHECK(x.counts(1, 0) == 2);
  CHECK(x.counts(0, 2) == 1);
  CHECK(x.counts(1, 2) == 0);
  CHECK(x.counts.diagonal().isZero());
  CHECK(build_cooc(std::vector<Annotation>{{"1", {"a"}}, {"2", {"b"}}}, {"a", "b"}).counts.isZero());
  CHECK(build_cooc(std::vector<Annotation>{{"1", {"a", "a", "b"}}}, {"a", "b"}).counts(0, 1) == 1);
  CHECK_THROWS_AS(build_cooc(std::vector<Annotation>{{"1", {"z"}}}, {"a"}), InvalidInput);
}

TEST_CASE("glove weighting function") {
  CHECK(glove_weight(100, 100, 0.75) == 1.0);
  CHECK(glove_weight(0, 100, 0.75) == 0.0);
  CHECK(glove_weight(50, 100, 0.75) == doctest::Approx(0.594604).epsilon(1e-6));
  CHECK(glove_weight(500, 100, 0.75) == 1.0);
}

TEST_CASE("x_max is the linear-interpolation quantile of positive counts") {
  CoocMatrix x{{"a", "b", "c"}, Eigen::MatrixXd::Zero(3, 3)};
  x.counts(0, 1) = x.counts(1, 0) = 1;
  x.counts(0, 2) = x.counts(2, 0) = 3;
  x.counts(1, 2) = x.counts(2, 1) = 5;
  CHECK(resolve_x_max(x, 0.5) == 3.0);
  CHECK(resolve_x_max(x, 0.9) == doctest::Approx(4.6));
  CHECK(resolve_x_max(x, 1.0) == 5.0);
}

TEST_CASE("exact fit gives zero loss and gradient; the 2x2 example gives J = 2") {
  CoocMatrix x{{"a", "b"}, Eigen::MatrixXd::Zero(2, 2)};
  x.counts(0, 1) = x.counts(1, 0) = std::exp(1.0);
  GloveModel zero{x.labels, Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)};
  GloveConfig cfg;
  CHECK(glove_loss_grad(zero, x, cfg).loss == doctest::Approx(2.0).epsilon(1e-12));

  GloveModel fit = zero;
  fit.biases.setConstant(0.5);  // 0 + 0.5 + 0.5 = log e
  const GloveLossGrad g = glove_loss_grad(fit, x, cfg);
  CHECK(g.loss == doctest::Approx(0.0));
  CHECK(g.grad_embeddings.isZero(1e-15));
  CHECK(g.grad_biases.isZero(1e-15));

  CoocMatrix empty{{"a", "b"}, Eigen::MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS(glove_loss_grad(zero, empty, cfg), InvalidInput);
}

TEST_CASE("loss equals the double-loop oracle; gradients match finite differences") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 19;  // up to 20 x 20
    const CoocMatrix x = oracle::random_cooc(n, rng);
    if ((x.counts.array() > 0).count() == 0) continue;
    const GloveModel m = oracle::random_glove(x, 5, rng);
    const double xm = resolve_x_max(x, 0.9);
    const GloveLossGrad g = glove_loss_grad(m, x, xm, 0.75);
    CHECK(std::abs(g.loss - oracle::glove_loss(m, x, xm, 0.75)) <= 1e-10 * std::max(1.0, g.loss));
  }

  const CoocMatrix x = oracle::random_cooc(6, rng, 0.8);
  const GloveModel m = oracle::random_glove(x, 4, rng);
  const double xm = resolve_x_max(x, 0.9);
  const GloveLossGrad g = glove_loss_grad(m, x, xm, 0.75);
  const double h = 1e-6;
  double worst = 0;
  for (Eigen::Index i = 0; i < m.embeddings.size(); ++i) {
    GloveModel a = m, b = m;
    a.embeddings(i) += h;
    b.embeddings(i) -= h;
    const double fd = (oracle::glove_loss(a, x, xm, 0.75) - oracle::glove_loss(b, x, xm, 0.75)) / (2 * h);
    worst = std::max(worst, rel(fd, g.grad_embeddings(i)));
  }
  for (Eigen::Index i = 0; i < m.biases.size(); ++i) {
    GloveModel a = m, b = m;
    a.biases(i) += h;
    b.biases(i) -= h;
    const double fd = (oracle::glove_loss(a, x, xm, 0.75) - oracle::glove_loss(b, x, xm, 0.75)) / (2 * h);
    worst = std::max(worst, rel(fd, g.grad_biases(i)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("loss is invariant to a common orthogonal rotation of the embeddings") {
  Rng rng(9);
  const CoocMatrix x = oracle::random_cooc(12, rng);
  GloveModel m = oracle::random_glove(x, 6, rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(
                                Eigen::MatrixXd::Random(6, 6)).householderQ();
  GloveModel r = m;
  r.embeddings = m.embeddings * q;
  GloveConfig cfg;
  CHECK(std::abs(glove_loss_grad(m, x, cfg).loss - glove_loss_grad(r, x, cfg).loss) < 1e-10);
}

TEST_CASE("initialization range and zero epochs") {
  const auto fx = fixture::two_block(1);
  GloveConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 0;
  cfg.seed = 3;
  const GloveModel m = train_glove(fx.train, cfg);
  CHECK(m == init_glove(fx.train, cfg));
  CHECK(m.embeddings.cwiseAbs().maxCoeff() <= 0.5 / 16);
  CHECK(m.biases.isZero());
}

TEST_CASE("two-block fixture: block structure, held-out correlation, seed stability") {
  const auto fx = fixture::two_block(4);
  GloveConfig cfg;
  cfg.dim = 8;
  std::vector<double> rs;
  for (std::uint64_t seed : {4, 5}) {
    cfg.seed = seed;
    const GloveFit fit = fit_glove(fx.train, cfg);
    for (std::size_t e = 1; e < fit.epoch_loss.size(); ++e)
      CHECK(fit.epoch_loss[e] <= fit.epoch_loss[e - 1]);
    const auto& v = fit.model.embeddings;
    double within = 0, across = 0;
    int nw = 0, na = 0;
    for (int i = 0; i < 20; ++i)
      for (int j = i + 1; j < 20; ++j) {
        const double d = v.row(i).dot(v.row(j));
        if ((i < 10) == (j < 10)) {
          within += d;
          ++nw;
        } else {
          across += d;
          ++na;
        }
      }
    CHECK(within / nw > across / na);
    const auto r = validate_glove(fit.model, fx.test);
    REQUIRE(r.has_value());
    CHECK(*r >= 0.8);
    rs.push_back(*r);
  }
  CHECK(std::abs(rs[0] - rs[1]) <= 0.05);
}

TEST_CASE("validate_glove: perfect model, constant predictions, too few pairs") {
  CoocMatrix x{{"a", "b", "c"}, Eigen::MatrixXd::Zero(3, 3)};
  x.counts(0, 1) = x.counts(1, 0) = std::exp(1.0);
  x.counts(0, 2) = x.counts(2, 0) = std::exp(2.0);
  x.counts(1, 2) = x.counts(2, 1) = std::exp(3.0);
  // b = (0, 1, 2) gives b_i + b_j = 1, 2, 3 exactly.
  GloveModel m{x.labels, Eigen::MatrixXd::Zero(3, 2), Eigen::Vector3d(0, 1, 2)};
  CHECK(*validate_glove(m, x) == doctest::Approx(1.0).epsilon(1e-12));
  m.biases.setZero();
  CHECK_FALSE(validate_glove(m, x).has_value());
  CoocMatrix one{{"a", "b"}, Eigen::MatrixXd::Zero(2, 2)};
  one.counts(0, 1) = one.counts(1, 0) = 3;
  CHECK_THROWS_AS(validate_glove(GloveModel{one.labels, Eigen::MatrixXd::Zero(2, 2),
                                            Eigen::VectorXd::Zero(2)}, one),
                  InvalidInput);
}

TEST_CASE("CSV and annotation round trips; asymmetric matrices rejected") {
  Rng rng(2);
  const CoocMatrix x = oracle::random_cooc(5, rng);
  const auto dir = std::filesystem::temp_directory_path();
  write_cooc_csv(dir / "gazessl_cooc.csv", x);
  const CoocMatrix back = read_cooc_csv(dir / "gazessl_cooc.csv");
  CHECK(back.labels == x.labels);
  CHECK(back.counts == x.counts);

  const std::vector<Annotation> ann{{"img1", {"a", "b"}}, {"img2", {"c"}}};
  write_annotations_jsonl(dir / "gazessl_ann.jsonl", ann);
  const auto ann2 = read_annotations_jsonl(dir / "gazessl_ann.jsonl");
  REQUIRE(ann2.size() == 2);
  CHECK(ann2[0].labels == ann[0].labels);

  CoocMatrix bad = x;
  bad.counts(0, 1) += 1;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
}
