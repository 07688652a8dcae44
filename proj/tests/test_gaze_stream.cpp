#include <doctest.h>

#include <cmath>
#include <random>

#include "gazessl/error.hpp"
#include "gazessl/gaze_stream.hpp"
#include "gazessl/rng.hpp"
#include "oracles.hpp"

using namespace gazessl;

namespace {

GazeTrajectory from_steps(const std::vector<double>& steps, double period = 200.0) {
  GazeTrajectory t{"v", "c", {}, period};
  double x = 0.0;
  t.points.push_back({0, 0.0, x, 0.0});
  for (std::size_t i = 0; i < steps.size(); ++i) {
    x += steps[i];
    t.points.push_back({static_cast<int>(i + 1), (i + 1) * period, x, 0.0});
  }
  return t;
}

}  // namespace

TEST_CASE("peak_gaze: argmax with row-major tie breaking") {
  Grid m(8, 8);
  m.at(5, 7) = 1.0f;
  CHECK(peak_gaze(m).x == 5);
  CHECK(peak_gaze(m).y == 7);

  const Grid zeros(4, 4);
  CHECK(peak_gaze(zeros).x == 0);
  CHECK(peak_gaze(zeros).y == 0);

  Grid tie(8, 8);
  tie.at(4, 1) = 2.0f;
  tie.at(2, 3) = 2.0f;
  CHECK(peak_gaze(tie).x == 4);
  CHECK(peak_gaze(tie).y == 1);

  CHECK_THROWS_AS(peak_gaze(Grid()), InvalidInput);
  Grid neg(2, 2);
  neg.at(1, 1) = -1.0f;
  CHECK_THROWS_AS(peak_gaze(neg), InvalidInput);
}

TEST_CASE("peak_gaze returns a maximal value on random maps") {
  Rng rng(1);
  std::uniform_int_distribution<int> small(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    Grid m(7, 5);
    for (auto& v : m.values) v = static_cast<float>(small(rng));
    const GazeXY g = peak_gaze(m);
    const float best = m.at(static_cast<std::uint32_t>(g.x), static_cast<std::uint32_t>(g.y));
    for (float v : m.values) CHECK(best >= v);
  }
}

TEST_CASE("crop_window: centred, clamped left/top, clamped right") {
  auto w = crop_window({270, 270}, 224, 540, 540);
  CHECK(w.left == 158);
  CHECK(w.top == 158);
  w = crop_window({10, 10}, 224, 540, 540);
  CHECK(w.left == 0);
  CHECK(w.top == 0);
  w = crop_window({530, 270}, 224, 540, 540);
  CHECK(w.left == 316);
  CHECK(w.top == 158);
  CHECK_THROWS_AS(crop_window({10, 10}, 600, 540, 540), InvalidInput);
  CHECK_THROWS_AS(crop_window({10, 10}, 0, 540, 540), InvalidInput);
}

TEST_CASE("crop_window: round half up on odd offsets") {
  // 5 - 3/2 = 3.5 rounds to 4.
  CHECK(crop_window({5, 5}, 3, 20, 20).left == 4);
  CHECK(crop_window({5.49, 5}, 2, 20, 20).left == 4);
}

TEST_CASE("apply_crop: interior block, identity, single pixel") {
  Grid f(4, 4);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<float>(i);
  const Grid c = apply_crop(f, {1, 1, 2});
  CHECK(c.values == std::vector<float>{5, 6, 9, 10});
  CHECK(apply_crop(f, {0, 0, 4}) == f);
  CHECK(apply_crop(f, {0, 0, 1}).values == std::vector<float>{0});
  CHECK_THROWS_AS(apply_crop(f, {3, 0, 2}), InvalidInput);
}

TEST_CASE("downsample_area averages blocks") {
  Grid f(4, 2);
  f.values = {1, 3, 5, 7, 1, 3, 5, 7};
  const Grid d = downsample_area(f, 2, 1);
  CHECK(d.values == std::vector<float>{2, 6});
  CHECK_THROWS_AS(downsample_area(f, 3, 1), InvalidInput);
}

TEST_CASE("segment_fixations: worked examples") {
  auto segs = segment_fixations(from_steps({5, 5, 90, 5}), 15);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start_idx == 0);
  CHECK(segs[0].end_idx == 2);
  CHECK(segs[1].start_idx == 3);
  CHECK(segs[1].end_idx == 4);

  segs = segment_fixations(from_steps({}), 15);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].end_idx == 0);

  // Strict inequality: displacement exactly at the threshold splits.
  CHECK(segment_fixations(from_steps({5, 5, 5}), 5).size() == 4);
}

TEST_CASE("segment_fixations rejects non-monotonic timestamps") {
  GazeTrajectory t = from_steps({1, 1});
  t.points[2].timestamp_ms = 100.0;
  CHECK_THROWS_AS(segment_fixations(t, 15), InvalidInput);
  CHECK_THROWS_AS(segment_fixations(from_steps({1}), 0.0), InvalidInput);
}

TEST_CASE("segment_fixations matches the brute-force reference on random trajectories") {
  Rng rng(42);
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_real_distribution<double> step(0.0, 40.0);
  std::uniform_real_distribution<double> thr(1.0, 50.0);
  std::uniform_int_distribution<int> period_pick(0, 2);
  const double periods[] = {200.0, 100.0, 40.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const double period = periods[period_pick(rng)];
    GazeTrajectory t{"v", "c", {}, period};
    double x = 100, y = 100;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      t.points.push_back({i, i * period, x, y});
      x += step(rng) - 20.0;
      y += step(rng) - 20.0;
    }
    const double p = thr(rng);
    const auto got = segment_fixations(t, p);
    const auto want = oracle::segments(t, p);
    REQUIRE(got.size() == want.size());
    for (std::size_t s = 0; s < got.size(); ++s) {
      CHECK(got[s].start_idx == want[s].first);
      CHECK(got[s].end_idx == want[s].second);
    }
  }
}

TEST_CASE("displacement statistics") {
  const GazeTrajectory t = from_steps({1, 2, 3});
  const auto st = displacement_stats(std::vector<GazeTrajectory>{t}, 200.0, 3);
  CHECK(st.mle_rate == doctest::Approx(0.5));
  CHECK(st.displacements == std::vector<double>{1, 2, 3});
  std::size_t total = 0;
  for (auto c : st.histogram.counts) total += c;
  CHECK(total == 3);
  CHECK(st.histogram.bin_edges.size() == 4);

  const auto zero = displacement_stats(std::vector<GazeTrajectory>{from_steps({0, 0})}, 200.0);
  CHECK(std::isinf(zero.mle_rate));
  CHECK(zero.degenerate);

  CHECK_THROWS_AS(displacement_stats(std::vector<GazeTrajectory>{from_steps({1})}, 1000.0),
                  InvalidInput);
}

TEST_CASE("displacement statistics ignore trajectory order") {
  const std::vector<GazeTrajectory> a{from_steps({1, 4, 2}), from_steps({7, 0.5})};
  const std::vector<GazeTrajectory> b{a[1], a[0]};
  CHECK(displacement_stats(a, 200.0).displacements == displacement_stats(b, 200.0).displacements);
  CHECK(displacement_stats(a, 400.0).mle_rate == displacement_stats(b, 400.0).mle_rate);
}

TEST_CASE("exponential MLE recovers the generating rate") {
  Rng rng(7);
  std::exponential_distribution<double> e(0.1);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  GazeTrajectory t{"v", "c", {}, 200.0};
  double x = 0, y = 0;
  for (int i = 0; i <= 10000; ++i) {
    t.points.push_back({i, i * 200.0, x, y});
    const double d = e(rng), a = angle(rng);
    x += d * std::cos(a);
    y += d * std::sin(a);
  }
  const auto st = displacement_stats(std::vector<GazeTrajectory>{t}, 200.0);
  CHECK(st.displacements.size() == 10000);
  CHECK(std::abs(st.mle_rate - 0.1) / 0.1 < 0.05);
}

TEST_CASE("gaze distribution") {
  GazeTrajectory one{"v", "c", {{0, 0.0, 10, 20}}, 200.0};
  auto d = gaze_distribution(std::vector<GazeTrajectory>{one});
  CHECK(d.mean_x == 10);
  CHECK(d.mean_y == 20);
  CHECK(d.std_x == 0);
  GazeTrajectory two{"v", "c", {{0, 0.0, 0, 0}, {1, 200.0, 10, 0}}, 200.0};
  d = gaze_distribution(std::vector<GazeTrajectory>{two});
  CHECK(d.mean_x == 5);
  CHECK(d.std_x == 5);
  CHECK(d.std_y == 0);

  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 539.0);
  GazeTrajectory many{"v", "c", {}, 200.0};
  for (int i = 0; i < 100000; ++i) many.points.push_back({i, i * 200.0, u(rng), u(rng)});
  d = gaze_distribution(std::vector<GazeTrajectory>{many});
  CHECK(std::abs(d.mean_x - 269.5) / 269.5 < 0.01);
  CHECK(std::abs(d.mean_y - 269.5) / 269.5 < 0.01);
}

TEST_CASE("trajectory JSON-lines round trip") {
  const auto p = std::filesystem::temp_directory_path() / "gazessl_traj.jsonl";
  std::vector<GazeTrajectory> ts{from_steps({1.25, 2}), from_steps({3})};
  ts[1].video_id = "w";
  write_trajectories_jsonl(p, ts);
  const auto back = read_trajectories_jsonl(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0].points.size() == 3);
  CHECK(back[0].points[1].x == 1.25);
  CHECK(back[1].video_id == "w");
}
