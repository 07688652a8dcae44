#include <doctest.h>

#include <cmath>

#include "gazessl/error.hpp"
#include "gazessl/experiment.hpp"
#include "gazessl/linear_probe.hpp"
#include "gazessl/synth_world.hpp"

using namespace gazessl;

TEST_CASE("invalid world configs are rejected") {
  WorldConfig c;
  c.patch_size = 80;
  CHECK_THROWS_AS(SynthWorld{c}, InvalidInput);
  c = WorldConfig{};
  c.noise_std = -1;
  CHECK_THROWS_AS(SynthWorld{c}, InvalidInput);
  c = WorldConfig{};
  c.n_videos = 0;
  CHECK_THROWS_AS(SynthWorld{c}, InvalidInput);
}

TEST_CASE("stream layout, labels and determinism") {
  WorldConfig c;
  c.n_videos = 3;
  c.frames_per_video = 40;
  const SynthStream s = gen_stream(c);
  REQUIRE(s.frames.size() == 120);
  REQUIRE(s.manifest.records.size() == 120);
  REQUIRE(s.trajectories.size() == 3);
  validate(s.manifest);
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    const auto& f = s.frames[i];
    CHECK(f.object_class >= 0);
    CHECK(f.object_class < c.n_object_classes);
    CHECK(f.context_class < c.n_context_classes);
    CHECK(f.image.width == 64u);
    // Context is fixed within a video; object changes only at dwell boundaries.
    if (i % 40 != 0) {
      CHECK(f.context_class == s.frames[i - 1].context_class);
      if (i % 10 != 0) CHECK(f.object_class == s.frames[i - 1].object_class);
    }
  }
  const SynthStream again = gen_stream(c);
  for (std::size_t i = 0; i < s.frames.size(); ++i) CHECK(again.frames[i].image == s.frames[i].image);
}

TEST_CASE("no noise and one dwell per video: frames differ only by gaze jitter") {
  WorldConfig c;
  c.n_videos = 2;
  c.frames_per_video = 12;
  c.object_dwell_frames = 12;
  c.noise_std = 0.0;
  const SynthWorld w(c);
  const SynthStream s = w.generate(3, 2);
  for (std::size_t i = 1; i < 12; ++i) {
    const auto& f = s.frames[i];
    const Grid rerendered =
        w.render(s.frames[0].object_class, s.frames[0].context_class, {f.gaze.x, f.gaze.y},
                 std::vector<double>(static_cast<std::size_t>(c.nuisance_dim), 0.0));
    CHECK(rerendered == f.image);
  }
}

TEST_CASE("two object classes with dwell 10: frame 10 differs about half the time") {
  WorldConfig c;
  c.n_object_classes = 2;
  c.n_videos = 400;
  c.frames_per_video = 11;
  const SynthStream s = gen_stream(c);
  int differ = 0;
  for (std::size_t v = 0; v < 400; ++v) {
    for (std::size_t f = 1; f < 10; ++f)
      CHECK(s.frames[v * 11 + f].object_class == s.frames[v * 11].object_class);
    differ += s.frames[v * 11 + 10].object_class != s.frames[v * 11].object_class;
  }
  // Binomial(400, 0.5): mean 200, sd 10.
  CHECK(std::abs(differ - 200) < 40);
}

TEST_CASE("default stream: saccades dominate within-fixation jitter") {
  const SynthStream s = gen_stream(WorldConfig{});
  double within = 0, between = 0;
  int nw = 0, nb = 0;
  const int dwell = WorldConfig{}.object_dwell_frames;
  for (const auto& t : s.trajectories)
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      const double d = std::hypot(t.points[i].x - t.points[i - 1].x,
                                  t.points[i].y - t.points[i - 1].y);
      if (i % static_cast<std::size_t>(dwell) == 0) {
        between += d;
        ++nb;
      } else {
        within += d;
        ++nw;
      }
    }
  CHECK(within / nw < between / nb);
  // Two-sample z statistic on the means is far beyond the 1% level.
  CHECK(between / nb - within / nw > 10.0);
}

TEST_CASE("object class is linearly recoverable from noiseless centre patches") {
  WorldConfig c;
  c.noise_std = 0.0;
  c.n_videos = 10;
  const SynthWorld w(c);
  const SynthStream tr = w.generate(1, 10), te = w.generate(2, 6);
  const ViewSpec v;  // gaze crop of the patch size
  ProbeConfig pc;
  pc.classes = c.n_object_classes;
  const ProbeModel m = train_probe(view_matrix(tr, v), object_labels(tr), pc);
  CHECK(evaluate(m, view_matrix(te, v), object_labels(te)) > 0.95);
}
