// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
//
// Mechanism criteria run the shipped recipe configs (configs/*.ini) with their fixed seeds;
// only the sweep values are narrowed to the two settings being compared and the output
// directory is redirected to a scratch location.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gazessl/config.hpp"
#include "gazessl/contrastive.hpp"
#include "gazessl/cooc_embed.hpp"
#include "gazessl/experiment.hpp"
#include "gazessl/gaze_stream.hpp"
#include "gazessl/rsa_cka.hpp"
#include "oracles.hpp"
#include "two_block.hpp"

using namespace gazessl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool ok = v.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s  %-22s %s [%.1fs of %.0fs budget%s]\n", ok ? "PASS" : "FAIL", name.c_str(),
              v.detail.c_str(), secs, budget_s, in_time ? "" : ", OVER BUDGET");
  std::fflush(stdout);
}

std::string num(double v, const char* f = "%.3g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const fs::path kScratch = fs::temp_directory_path() / "gazessl_acceptance";

ExperimentConfig recipe(const std::string& file, std::vector<double> sweep) {
  ExperimentConfig c = load_config(fs::path(GAZESSL_CONFIG_DIR) / file);
  c.sweep = std::move(sweep);
  c.output_dir = kScratch / fs::path(file).stem();
  return c;
}

// points[] entries grouped by repeat: value -> metric for each repeat.
std::vector<std::pair<double, double>> metric_pairs(const nlohmann::ordered_json& summary,
                                                    const std::string& metric) {
  // Each repeat contributes its points in sweep order; with two sweep values they alternate.
  std::vector<std::pair<double, double>> out;
  const auto& pts = summary["points"];
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2)
    out.emplace_back(pts[i][metric].get<double>(), pts[i + 1][metric].get<double>());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------------------

Verdict info_nce_oracle() {
  Rng rng(2024);
  std::uniform_int_distribution<int> bsz(1, 8), dsz(1, 16);
  std::uniform_real_distribution<double> taus(0.05, 1.0);
  double worst_loss = 0, worst_grad = 0;
  for (int t = 0; t < 100; ++t) {
    const auto b = bsz(rng), d = dsz(rng);
    const Eigen::MatrixXd q = oracle::randn(b, d, rng), k = oracle::randn(b, d, rng);
    const double tau = taus(rng);
    const InfoNceResult r = info_nce(q, k, tau);
    worst_loss = std::max(worst_loss, std::abs(r.loss - oracle::info_nce(q, k, tau)));
    const auto fq = oracle::central_diff(
        q, [&](const Eigen::MatrixXd& x) { return info_nce(x, k, tau).loss; }, 1e-5);
    const auto fk = oracle::central_diff(
        k, [&](const Eigen::MatrixXd& x) { return info_nce(q, x, tau).loss; }, 1e-5);
    worst_grad = std::max({worst_grad, oracle::max_rel_error(r.grad_q, fq),
                           oracle::max_rel_error(r.grad_k, fk)});
  }
  return {worst_loss <= 1e-10 && worst_grad < 1e-4,
          "max |loss - oracle| = " + num(worst_loss) + " (tol 1e-10), max grad rel err = " +
              num(worst_grad) + " (tol 1e-4)"};
}

Verdict ema_exactness() {
  Rng rng(77);
  std::uniform_int_distribution<int> width(1, 12);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const EncoderConfig cfg{width(rng), {width(rng)}, width(rng), width(rng), Activation::relu};
    ModelParams a = init_model(cfg, rng()), b = init_model(cfg, rng());
    for (double m : {0.0, 0.5, 0.996, 1.0}) {
      Mlp k = b.theta_q;
      const double before = std::sqrt(squared_distance(k, a.theta_q));
      ema_update(k, a.theta_q, m);
      worst = std::max(worst, std::abs(std::sqrt(squared_distance(k, a.theta_q)) - m * before));
    }
  }
  return {worst <= 1e-12, "max |d' - m d| = " + num(worst) + " over 400 updates (tol 1e-12)"};
}

Verdict slowness() {
  // Sweep values are in seconds; one frame is 200 ms, so 1 s is the 5-frame window.
  const auto s = run_experiment(recipe("slowness.ini", {0, 1}));
  Verdict v;
  v.detail = "object acc dT=0 -> dT=5 frames:";
  for (const auto& [a0, a5] : metric_pairs(s, "object_acc")) {
    v.pass = v.pass && (a5 - a0 >= 0.10);
    v.detail += " " + num(a0, "%.3f") + "->" + num(a5, "%.3f");
  }
  v.detail += " (need +0.10 on each of 3 seeds)";
  return v;
}

Verdict central_crop() {
  const auto s = run_experiment(recipe("crop.ini", {8, 64}));
  const auto obj = metric_pairs(s, "object_acc"), ctx = metric_pairs(s, "context_acc");
  Verdict v;
  v.detail = "crop vs full (obj; ctx):";
  for (std::size_t i = 0; i < obj.size(); ++i) {
    v.pass = v.pass && obj[i].first > obj[i].second && ctx[i].first < ctx[i].second;
    v.detail += " " + num(obj[i].first, "%.3f") + ">" + num(obj[i].second, "%.3f") + ";" +
                num(ctx[i].first, "%.3f") + "<" + num(ctx[i].second, "%.3f");
  }
  v.pass = v.pass && obj.size() == 3;
  return v;
}

Verdict fixation() {
  const auto s =
      run_experiment(recipe("fixation.ini", {15, std::numeric_limits<double>::infinity()}));
  Verdict v;
  v.detail = "object acc P=15 vs P=inf:";
  const auto pairs = metric_pairs(s, "object_acc");
  for (const auto& [a15, ainf] : pairs) {
    v.pass = v.pass && a15 >= ainf;
    v.detail += " " + num(a15, "%.4f") + ">=" + num(ainf, "%.4f");
  }
  v.pass = v.pass && pairs.size() == 3;
  return v;
}

Verdict glove() {
  Rng rng(31);
  // Loss against the double-loop oracle on 20 x 20 matrices.
  double worst_loss = 0;
  for (int t = 0; t < 20; ++t) {
    const CoocMatrix x = oracle::random_cooc(20, rng);
    const GloveModel m = oracle::random_glove(x, 8, rng);
    const double xm = resolve_x_max(x, 0.9);
    const double j = glove_loss_grad(m, x, xm, 0.75).loss;
    worst_loss = std::max(worst_loss, std::abs(j - oracle::glove_loss(m, x, xm, 0.75)));
  }
  // Gradient check by central differences of the oracle loss.
  const CoocMatrix x = oracle::random_cooc(6, rng, 0.8);
  const GloveModel m = oracle::random_glove(x, 4, rng);
  const double xm = resolve_x_max(x, 0.9);
  const GloveLossGrad g = glove_loss_grad(m, x, xm, 0.75);
  const auto fe = oracle::central_diff(m.embeddings, [&](const Eigen::MatrixXd& e) {
    GloveModel t = m;
    t.embeddings = e;
    return oracle::glove_loss(t, x, xm, 0.75);
  }, 1e-6);
  const auto fb = oracle::central_diff(m.biases, [&](const Eigen::MatrixXd& b) {
    GloveModel t = m;
    t.biases = b;
    return oracle::glove_loss(t, x, xm, 0.75);
  }, 1e-6);
  const double worst_grad = std::max(oracle::max_rel_error(g.grad_embeddings, fe, 1e-8),
                                     oracle::max_rel_error(g.grad_biases, fb, 1e-8));
  // Two-block fixture over five seeds.
  const auto fx = fixture::two_block(4);
  int good = 0;
  std::string rs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GloveConfig cfg;
    cfg.dim = 8;
    cfg.seed = seed;
    const GloveModel fit = train_glove(fx.train, cfg);
    const auto r = validate_glove(fit, fx.test);
    double within = 0, across = 0;
    int nw = 0, na = 0;
    for (int i = 0; i < 20; ++i)
      for (int j = i + 1; j < 20; ++j) {
        const double d = fit.embeddings.row(i).dot(fit.embeddings.row(j));
        ((i < 10) == (j < 10) ? within : across) += d;
        ++((i < 10) == (j < 10) ? nw : na);
      }
    const bool ok = r && *r >= 0.8 && within / nw > across / na;
    good += ok;
    rs += " " + (r ? num(*r, "%.3f") : std::string("undef"));
  }
  return {worst_loss <= 1e-10 && worst_grad <= 1e-5 && good == 5,
          "loss err " + num(worst_loss) + ", grad rel err " + num(worst_grad) +
              ", two-block r =" + rs + " (" + std::to_string(good) + "/5 seeds ok)"};
}

Verdict cka() {
  Rng rng(55);
  std::uniform_int_distribution<int> rows(3, 30), cols(1, 12);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  double self = 0, orth = 0, scl = 0, perm = 0, gram = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = rows(rng), p = cols(rng), q = cols(rng);
    const Eigen::MatrixXd x = oracle::randn(n, p, rng), y = oracle::randn(n, q, rng);
    const double base = linear_cka(x, y);
    self = std::max(self, std::abs(linear_cka(x, x) - 1.0));
    orth = std::max(orth, std::abs(linear_cka(x * oracle::random_orthogonal(p, rng),
                                              y * oracle::random_orthogonal(q, rng)) - base));
    scl = std::max(scl, std::abs(linear_cka(scale(rng) * x, -scale(rng) * y) - base));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> pm(n);
    for (Eigen::Index i = 0; i < n; ++i) pm.indices()(i) = order[static_cast<std::size_t>(i)];
    perm = std::max(perm, std::abs(linear_cka(pm * x, pm * y) - base));
    gram = std::max(gram, std::abs(base - oracle::gram_cka(x, y)));
  }
  const double worst = std::max({self, orth, scl, perm, gram});
  return {worst <= 1e-10, "max deviations: self " + num(self) + ", orthogonal " + num(orth) +
                              ", scaling " + num(scl) + ", permutation " + num(perm) +
                              ", Gram form " + num(gram) + " (tol 1e-10)"};
}

Verdict t_test() {
  const auto r = paired_t_test(std::vector<double>{1, 2, 3});
  const auto zero = paired_t_test(std::vector<double>{0.2, 0.5, 0.9}, std::vector<double>{0.2, 0.5, 0.9});
  const auto cst = paired_t_test(std::vector<double>{0.5, 0.5, 0.5});
  const auto neg = paired_t_test(std::vector<double>{-0.5, -0.5});
  const bool ok = std::abs(r.t - 3.4641) <= 1e-4 && std::abs(r.cohens_d - 2.0) <= 1e-10 &&
                  zero.t == 0 && zero.p == 1 && zero.cohens_d == 0 && std::isinf(cst.t) &&
                  cst.t > 0 && cst.p == 0 && std::isinf(cst.cohens_d) && cst.cohens_d > 0 &&
                  std::isinf(neg.t) && neg.t < 0;
  return {ok, "t = " + num(r.t, "%.6f") + ", d = " + num(r.cohens_d, "%.12g") + ", p = " +
                  num(r.p, "%.4f") + "; zero diffs -> (" + num(zero.t) + ", " + num(zero.p) +
                  ", " + num(zero.cohens_d) + "); constant diffs -> (" + num(cst.t) + ", " +
                  num(cst.p) + ", " + num(cst.cohens_d) + ")"};
}

Verdict geometry() {
  Rng rng(99);
  std::uniform_int_distribution<int> dim(1, 600);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad_crop = 0;
  for (int t = 0; t < 100000; ++t) {
    const int w = dim(rng), h = dim(rng);
    const int n = 1 + static_cast<int>(unit(rng) * std::min(w, h));
    const double gx = unit(rng) * (w - 1), gy = unit(rng) * (h - 1);
    const CropWindow c = crop_window({gx, gy}, std::min(n, std::min(w, h)), w, h);
    const bool inside = c.left >= 0 && c.top >= 0 && c.left + c.size <= w && c.top + c.size <= h;
    const bool holds = gx >= c.left && gx < c.left + c.size && gy >= c.top && gy < c.top + c.size;
    bad_crop += !(inside && holds);
  }
  int bad_seg = 0;
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_real_distribution<double> thr(1.0, 60.0);
  for (int t = 0; t < 1000; ++t) {
    const auto traj = oracle::random_walk(len(rng), t % 2 ? 200.0 : 100.0, 25.0, rng);
    const double p = thr(rng);
    const auto got = segment_fixations(traj, p);
    const auto want = oracle::segments(traj, p);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].start_idx == want[i].first && got[i].end_idx == want[i].second;
    bad_seg += !same;
  }
  Rng erng(7);
  std::exponential_distribution<double> e(0.1);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  GazeTrajectory walk{"v", "c", {}, 200.0};
  double x = 0, y = 0;
  for (int i = 0; i <= 10000; ++i) {
    walk.points.push_back({i, i * 200.0, x, y});
    const double d = e(erng), a = angle(erng);
    x += d * std::cos(a);
    y += d * std::sin(a);
  }
  const double rate = displacement_stats(std::vector<GazeTrajectory>{walk}, 200.0).mle_rate;
  const double rel = std::abs(rate - 0.1) / 0.1;
  return {bad_crop == 0 && bad_seg == 0 && rel < 0.05,
          std::to_string(bad_crop) + "/100000 crop violations, " + std::to_string(bad_seg) +
              "/1000 segmentation mismatches, MLE rate " + num(rate, "%.4f") + " vs 0.1 (" +
              num(100 * rel, "%.2f") + "% off, tol 5%)"};
}

Verdict determinism() {
  // Every recipe, shrunk so that the check stays quick, run twice into separate directories.
  const std::vector<std::pair<std::string, std::vector<double>>> recipes{
      {"slowness.ini", {0, 2}}, {"crop.ini", {16, 64}}, {"fixation.ini", {5, 1e300}},
      {"cooc.ini", {}}};
  std::string detail;
  bool ok = true;
  for (const auto& [file, sweep] : recipes) {
    ExperimentConfig c = recipe(file, sweep);
    for (auto& v : c.sweep)
      if (v > 1e299) v = std::numeric_limits<double>::infinity();
    c.repeats = 1;
    c.world.n_videos = 6;
    c.probe_train_videos = 4;
    c.probe_test_videos = 3;
    c.training.steps = 60;
    c.cka.glove_seeds = 4;
    c.glove.epochs = 100;
    const fs::path base = c.output_dir;
    c.output_dir = base / "first";
    run_experiment(c);
    c.output_dir = base / "second";
    run_experiment(c);
    const std::string a = slurp(base / "first" / "summary.json");
    const std::string b = slurp(base / "second" / "summary.json");
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += c.recipe + (same ? " identical" : " DIFFERS") + "; ";
  }
  detail += "summary.json compared byte for byte";
  return {ok, detail};
}

}  // namespace

int main() {
  fs::remove_all(kScratch);
  std::printf("Acceptance criteria\n");
  report("infonce-oracle", 5, info_nce_oracle);
  report("ema-exactness", 5, ema_exactness);
  report("slowness-mechanism", 180, slowness);
  report("central-crop", 180, central_crop);
  report("fixation-mechanism", 180, fixation);
  report("glove", 30, glove);
  report("cka", 10, cka);
  report("paired-t-test", 1, t_test);
  report("geometry-segmentation", 60, geometry);
  report("determinism", 120, determinism);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
