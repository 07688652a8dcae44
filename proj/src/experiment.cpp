#include "gazessl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "gazessl/checkpoint.hpp"
#include "gazessl/error.hpp"
#include "gazessl/rsa_cka.hpp"

namespace gazessl {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

Eigen::RowVectorXd view_vector(const LabeledFrame& frame, const ViewSpec& view) {
  const auto s = static_cast<int>(frame.image.width);
  Grid crop;
  switch (view.kind) {
    case ViewSpec::Kind::full_frame:
      crop = frame.image;
      break;
    case ViewSpec::Kind::center_crop:
      crop = apply_crop(frame.image,
                        crop_window({s / 2.0, frame.image.height / 2.0}, view.crop_size, s,
                                    static_cast<int>(frame.image.height)));
      break;
    case ViewSpec::Kind::gaze_crop:
      crop = apply_crop(frame.image, crop_window({frame.gaze.x, frame.gaze.y}, view.crop_size, s,
                                                 static_cast<int>(frame.image.height)));
      break;
  }
  const auto in = static_cast<std::uint32_t>(view.input_size);
  if (crop.width != in || crop.height != in) crop = downsample_area(crop, in, in);
  return flatten(crop);
}

Eigen::MatrixXd view_matrix(const SynthStream& stream, const ViewSpec& view) {
  require(!stream.frames.empty(), "view_matrix", "empty stream");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(stream.frames.size()),
                    static_cast<Eigen::Index>(view.input_size) * view.input_size);
  for (std::size_t i = 0; i < stream.frames.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = view_vector(stream.frames[i], view);
  return m;
}

std::vector<int> object_labels(const SynthStream& stream) {
  std::vector<int> out;
  out.reserve(stream.frames.size());
  for (const auto& f : stream.frames) out.push_back(f.object_class);
  return out;
}

std::vector<int> context_labels(const SynthStream& stream) {
  std::vector<int> out;
  out.reserve(stream.frames.size());
  for (const auto& f : stream.frames) out.push_back(f.context_class);
  return out;
}

WorldData make_world_data(const WorldConfig& world, std::size_t probe_train_videos,
                          std::size_t probe_test_videos) {
  const SynthWorld w(world);
  return {w.generate(derive_seed(world.seed, "stream"), world.n_videos),
          w.generate(derive_seed(world.seed, "probe-train"), probe_train_videos),
          w.generate(derive_seed(world.seed, "probe-test"), probe_test_videos)};
}

namespace {

double probe_accuracy(const Eigen::MatrixXd& xtr, const std::vector<int>& ytr,
                      const Eigen::MatrixXd& xte, const std::vector<int>& yte, ProbeConfig cfg) {
  const int mx = std::max(*std::max_element(ytr.begin(), ytr.end()),
                          *std::max_element(yte.begin(), yte.end()));
  cfg.classes = mx + 1;
  // A probe stream can, rarely, miss all but one class; the probe is then undefined.
  if (std::all_of(ytr.begin(), ytr.end(), [&](int y) { return y == ytr.front(); })) return 0.0;
  const ProbeModel m = train_probe(xtr, ytr, cfg);
  return evaluate(m, xte, yte);
}

}  // namespace

ProbeScores probe_scores(const Eigen::MatrixXd& train_features, const SynthStream& train,
                         const Eigen::MatrixXd& test_features, const SynthStream& test,
                         const ProbeConfig& cfg) {
  const Standardizer st = Standardizer::fit(train_features);
  const Eigen::MatrixXd xtr = st.apply(train_features);
  const Eigen::MatrixXd xte = st.apply(test_features);
  ProbeScores s;
  s.object_acc = probe_accuracy(xtr, object_labels(train), xte, object_labels(test), cfg);
  s.context_acc = probe_accuracy(xtr, context_labels(train), xte, context_labels(test), cfg);
  return s;
}

PointResult run_point(const WorldData& data, const ViewSpec& view, const SamplerConfig& sampler,
                      const EncoderConfig& encoder, const TrainConfig& training,
                      const ProbeConfig& probe) {
  EncoderConfig enc = encoder;
  enc.input_dim = static_cast<Eigen::Index>(view.input_size) * view.input_size;
  const Eigen::MatrixXd payloads = view_matrix(data.train, view);
  FixationMap fixations;
  if (sampler.fixation_constrained)
    fixations = fixation_map(data.train.manifest, data.train.trajectories,
                             sampler.velocity_threshold_p);

  PointResult r;
  r.training = train(data.train.manifest, payloads, sampler, enc, training,
                     sampler.fixation_constrained ? &fixations : nullptr);
  const auto& h = r.training.history;
  if (!h.empty()) {
    const std::size_t k = std::max<std::size_t>(1, h.size() / 20);
    for (std::size_t i = 0; i < k; ++i) {
      r.initial_loss += h[i].loss / static_cast<double>(k);
      r.final_loss += h[h.size() - 1 - i].loss / static_cast<double>(k);
    }
  }
  const Mlp& net = r.training.params.theta_q;
  r.scores = probe_scores(encode_features(net, enc, view_matrix(data.probe_train, view)),
                          data.probe_train,
                          encode_features(net, enc, view_matrix(data.probe_test, view)),
                          data.probe_test, probe);
  return r;
}

SeedPlan plan_seeds(std::uint64_t global_seed) {
  return {derive_seed(global_seed, "world"), derive_seed(global_seed, "sampler"),
          derive_seed(global_seed, "training"), derive_seed(global_seed, "probe"),
          derive_seed(global_seed, "glove")};
}

namespace {

std::string value_label(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

ojson number_or_inf(double v) { return std::isinf(v) ? ojson("inf") : ojson(v); }

struct Run {
  ExperimentConfig cfg;
  SeedPlan seeds;
  WorldData data;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw FormatError("cannot open " + p.string() + " for writing");
  os << text;
}

// One sweep point: trains, persists the metrics and checkpoint, returns the summary entry.
ojson sweep_point(const Run& run, std::size_t repeat, double value, const ViewSpec& view,
                  SamplerConfig sampler, const std::string& tag) {
  TrainConfig training = run.cfg.training;
  training.seed = derive_seed(run.seeds.training, repeat);
  sampler.seed = derive_seed(run.seeds.sampler, repeat);
  ProbeConfig probe = run.cfg.probe;
  probe.seed = derive_seed(run.seeds.probe, repeat);

  const PointResult r = run_point(run.data, view, sampler, run.cfg.encoder, training, probe);
  const std::string stem = tag + "_" + value_label(value) + "_r" + std::to_string(repeat);
  write_metrics_csv((run.cfg.output_dir / ("metrics_" + stem + ".csv")).string(),
                    r.training.history);
  EncoderConfig enc = run.cfg.encoder;
  enc.input_dim = static_cast<Eigen::Index>(view.input_size) * view.input_size;
  save_model(run.cfg.output_dir / ("model_" + stem + ".sscl"),
             {enc, training, training.steps, r.training.params});

  ojson e;
  e["value"] = number_or_inf(value);
  e["repeat"] = repeat;
  e["object_acc"] = r.scores.object_acc;
  e["context_acc"] = r.scores.context_acc;
  e["initial_loss"] = r.initial_loss;
  e["final_loss"] = r.final_loss;
  return e;
}

ojson run_sweep(const Run& run) {
  const auto& cfg = run.cfg;
  std::vector<double> values = cfg.sweep;
  std::string tag;
  if (cfg.recipe == "slowness-sweep") {
    tag = "dt";
    if (values.empty()) values = {0, 1, 2, 3, 4, 5};
  } else if (cfg.recipe == "crop-sweep") {
    tag = "crop";
    if (values.empty()) values = {8, 16, 32, 64};
  } else {
    tag = "p";
    if (values.empty()) values = {5, 15, 30, 45, std::numeric_limits<double>::infinity()};
  }
  ojson points = ojson::array();
  std::string csv = cfg.recipe == "slowness-sweep" ? "delta_t_s" :
                    cfg.recipe == "crop-sweep"     ? "crop_size" : "threshold_p";
  csv += ",repeat,object_acc,context_acc,initial_loss,final_loss\n";
  for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
    for (double v : values) {
      ViewSpec view = cfg.view;
      SamplerConfig sampler = cfg.sampler;
      if (cfg.recipe == "slowness-sweep") {
        require(v >= 0, "slowness-sweep", "delta_t must be non-negative");
        sampler.delta_t_ms = v * 1000.0;
      } else if (cfg.recipe == "crop-sweep") {
        require(v > 0 && v == std::floor(v), "crop-sweep", "crop sizes must be positive integers");
        view.kind = ViewSpec::Kind::gaze_crop;
        view.crop_size = static_cast<int>(v);
        require(view.crop_size <= cfg.world.image_size && view.crop_size % view.input_size == 0,
                "crop-sweep", "crop size must fit the image and be a multiple of input_size");
      } else {
        require(v > 0, "fixation-sweep", "thresholds must be positive");
        sampler.fixation_constrained = !std::isinf(v);
        sampler.velocity_threshold_p = v;
      }
      ojson e = sweep_point(run, rep, v, view, sampler, tag);
      char line[256];
      std::snprintf(line, sizeof line, "%s,%zu,%.17g,%.17g,%.17g,%.17g\n", value_label(v).c_str(),
                    rep, e["object_acc"].get<double>(), e["context_acc"].get<double>(),
                    e["initial_loss"].get<double>(), e["final_loss"].get<double>());
      csv += line;
      points.push_back(std::move(e));
    }
  }
  write_text(cfg.output_dir / "results.csv", csv);
  return points;
}

// Co-occurrence "images" are windows of three object dwells; labels are the object classes
// seen in the window.
std::vector<Annotation> window_annotations(const SynthStream& s, const WorldConfig& w,
                                           const std::string& prefix) {
  std::vector<Annotation> out;
  const std::size_t window = 3 * static_cast<std::size_t>(w.object_dwell_frames);
  for (std::size_t start = 0; start < s.frames.size();) {
    const std::size_t video = s.frames[start].video;
    Annotation a;
    a.image_id = prefix + std::to_string(out.size());
    std::size_t i = start;
    for (; i < s.frames.size() && i < start + window && s.frames[i].video == video; ++i)
      a.labels.push_back("obj" + std::to_string(s.frames[i].object_class));
    out.push_back(std::move(a));
    start = i;
  }
  return out;
}

std::vector<RepMatrix> object_layer_reps(const Mlp& net, const EncoderConfig& enc,
                                         const SynthStream& s, const ViewSpec& view) {
  const auto layers = encode_layers(net, enc, view_matrix(s, view));
  std::vector<RepMatrix> reps;
  for (const auto& acts : layers) {
    std::map<std::string, std::vector<Eigen::VectorXd>> per_object;
    for (std::size_t i = 0; i < s.frames.size(); ++i)
      per_object["obj" + std::to_string(s.frames[i].object_class)].push_back(
          acts.row(static_cast<Eigen::Index>(i)).transpose());
    reps.push_back(aggregate_object_reps(per_object));
  }
  return reps;
}

// GloVe embeddings restricted to (and ordered like) the given object ids. Objects that never
// appear in the probe stream have no model representation and are left out.
RepMatrix glove_rows(const GloveModel& g, const std::vector<std::string>& ids) {
  RepMatrix out{ids, Eigen::MatrixXd(static_cast<Eigen::Index>(ids.size()), g.embeddings.cols())};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = std::find(g.labels.begin(), g.labels.end(), ids[i]);
    require(it != g.labels.end(), "cooc-align", "object '" + ids[i] + "' missing from GloVe");
    out.features.row(static_cast<Eigen::Index>(i)) =
        g.embeddings.row(static_cast<Eigen::Index>(it - g.labels.begin()));
  }
  return out;
}

ojson run_cooc_align(const Run& run) {
  const auto& cfg = run.cfg;
  const auto train_ann = window_annotations(run.data.train, cfg.world, "train");
  std::vector<Annotation> test_ann = window_annotations(run.data.probe_train, cfg.world, "pt");
  const auto more = window_annotations(run.data.probe_test, cfg.world, "pe");
  test_ann.insert(test_ann.end(), more.begin(), more.end());
  std::vector<std::string> vocab;
  for (int o = 0; o < cfg.world.n_object_classes; ++o) vocab.push_back("obj" + std::to_string(o));
  const CoocMatrix x_train = build_cooc(train_ann, vocab);
  const CoocMatrix x_test = build_cooc(test_ann, vocab);
  write_cooc_csv(cfg.output_dir / "cooc_train.csv", x_train);
  write_cooc_csv(cfg.output_dir / "cooc_test.csv", x_test);

  // Two SSL models: the configured window and the baseline window.
  EncoderConfig enc = cfg.encoder;
  enc.input_dim = static_cast<Eigen::Index>(cfg.view.input_size) * cfg.view.input_size;
  struct Model {
    std::string name;
    double delta_t_ms;
    std::vector<RepMatrix> layers;
    RepMatrix concat;
    std::vector<double> scores;
    ojson entry;
  };
  std::vector<Model> models{{"model", cfg.sampler.delta_t_ms, {}, {}, {}, {}},
                            {"baseline", cfg.cka.baseline_delta_t_ms, {}, {}, {}, {}}};
  for (auto& m : models) {
    SamplerConfig sampler = cfg.sampler;
    sampler.delta_t_ms = m.delta_t_ms;
    m.entry = sweep_point(run, 0, m.delta_t_ms, cfg.view, sampler, m.name);
    const ModelCheckpoint ck =
        load_model(cfg.output_dir / ("model_" + m.name + "_" + value_label(m.delta_t_ms) +
                                     "_r0.sscl"));
    m.layers = object_layer_reps(ck.params.theta_q, enc, run.data.probe_train, cfg.view);
    m.concat = concat_layers(m.layers);
  }

  std::string csv = "model,layer,seed,score\n";
  ojson glove_r = ojson::array();
  char line[256];
  for (std::size_t k = 0; k < cfg.cka.glove_seeds; ++k) {
    GloveConfig gc = cfg.glove;
    gc.seed = derive_seed(run.seeds.glove, k);
    const GloveModel g = train_glove(x_train, gc);
    const auto r = validate_glove(g, x_test);
    glove_r.push_back(r ? ojson(*r) : ojson(nullptr));
    for (auto& m : models) {
      const RepMatrix aligned = align_objects(m.concat, glove_rows(g, m.concat.object_ids));
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        std::snprintf(line, sizeof line, "%s,%zu,%zu,%.17g\n", m.name.c_str(), l, k,
                      linear_cka(m.layers[l], aligned));
        csv += line;
      }
      m.scores.push_back(linear_cka(m.concat, aligned));
      std::snprintf(line, sizeof line, "%s,concat,%zu,%.17g\n", m.name.c_str(), k,
                    m.scores.back());
      csv += line;
    }
  }
  const TTestResult t = paired_t_test(models[0].scores, models[1].scores);
  for (auto& m : models) {
    const MeanStd ms = mean_std(m.scores);
    std::snprintf(line, sizeof line, "%s,summary,mean=%.17g std=%.17g,t=%.17g p=%.17g d=%.17g\n",
                  m.name.c_str(), ms.mean, ms.std, t.t, t.p, t.cohens_d);
    csv += line;
    m.entry["cka_mean"] = ms.mean;
    m.entry["cka_std"] = ms.std;
  }
  write_text(cfg.output_dir / "cka_scores.csv", csv);

  ojson out;
  out["models"] = ojson::array({models[0].entry, models[1].entry});
  out["glove_test_r"] = glove_r;
  out["paired_t"] = {{"t", number_or_inf(t.t)}, {"p", t.p}, {"cohens_d", number_or_inf(t.cohens_d)}};
  return out;
}

}  // namespace

ojson run_experiment(const ExperimentConfig& config) {
  validate(config);
  require(!config.output_dir.empty(), "run_experiment", "output_dir is empty");
  fs::create_directories(config.output_dir);

  Run run{config, plan_seeds(config.seed), {}};
  run.cfg.world.seed = run.seeds.world;
  run.data = make_world_data(run.cfg.world, config.probe_train_videos, config.probe_test_videos);

  ojson summary;
  summary["recipe"] = config.recipe;
  summary["seed"] = config.seed;
  summary["config"] = to_json(config);
  if (config.recipe == "cooc-align")
    summary["results"] = run_cooc_align(run);
  else
    summary["points"] = run_sweep(run);
  write_text(config.output_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace gazessl
