// gazessl: command-line front end for the gaze-driven self-supervised pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazessl/checkpoint.hpp"
#include "gazessl/config.hpp"
#include "gazessl/contrastive.hpp"
#include "gazessl/cooc_embed.hpp"
#include "gazessl/error.hpp"
#include "gazessl/experiment.hpp"
#include "gazessl/gaze_stream.hpp"
#include "gazessl/grid.hpp"
#include "gazessl/linear_probe.hpp"
#include "gazessl/pair_sampler.hpp"
#include "gazessl/rsa_cka.hpp"
#include "gazessl/synth_world.hpp"

namespace fs = std::filesystem;
using namespace gazessl;
using nlohmann::json;

namespace {

// Raised for bad flag combinations detected after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw FormatError("cannot open " + p.string() + " for writing");
  return os;
}

// Writes to the file when a path is given, otherwise to stdout.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    auto os = open_out(out);
    os << text;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Eigen::MatrixXd rows_from_grids(const std::vector<Grid>& grids) {
  if (grids.empty()) throw InvalidInput("no grids in input");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(grids.size()),
                    static_cast<Eigen::Index>(grids.front().size()));
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i].size() != grids.front().size())
      throw InvalidInput("grids differ in size; cannot stack as rows");
    m.row(static_cast<Eigen::Index>(i)) = flatten(grids[i]);
  }
  return m;
}

// A feature file is either a single width x rows grid or a stack of grids (one per row).
Eigen::MatrixXd read_features(const fs::path& p) {
  const auto grids = read_grids(p);
  if (grids.size() == 1) return matrix_from_grid(grids.front());
  return rows_from_grids(grids);
}

std::vector<int> read_labels(const fs::path& p, const std::string& key) {
  std::ifstream is(p);
  if (!is) throw FormatError("cannot open " + p.string());
  std::vector<int> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!j.contains(key) || !j[key].is_number_integer())
      throw FormatError(p.string() + ":" + std::to_string(n) + ": missing integer '" + key + "'");
    out.push_back(j[key].get<int>());
  }
  return out;
}

std::vector<Eigen::Index> parse_dims(const std::string& s) {
  std::vector<Eigen::Index> dims;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      dims.push_back(std::stol(tok));
    } catch (const std::exception&) {
      throw UsageError("bad dimension list '" + s + "'");
    }
  }
  return dims;
}

// ---- gaze -----------------------------------------------------------------------------

struct GazeOpts {
  std::string saliency, trajectories, out, video_id = "v0000", clip_id = "c0000";
  double period_ms = 200.0, p = 15.0, lag_ms = 200.0;
  std::size_t bins = 30;
};

void gaze_extract(const GazeOpts& o) {
  const auto maps = read_grids(o.saliency);
  GazeTrajectory t{o.video_id, o.clip_id, {}, o.period_ms};
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const GazeXY g = peak_gaze(maps[i]);
    t.points.push_back({static_cast<int>(i), static_cast<double>(i) * o.period_ms, g.x, g.y});
  }
  std::vector<GazeTrajectory> all{t};
  if (o.out.empty()) throw UsageError("gaze extract needs --out");
  write_trajectories_jsonl(o.out, all);
}

void gaze_segment(const GazeOpts& o) {
  std::string csv = "video_id,clip_id,start_idx,end_idx\n";
  for (const auto& t : read_trajectories_jsonl(o.trajectories, o.period_ms))
    for (const auto& s : segment_fixations(t, o.p))
      csv += t.video_id + "," + t.clip_id + "," + std::to_string(s.start_idx) + "," +
             std::to_string(s.end_idx) + "\n";
  emit(o.out, csv);
}

void gaze_stats(const GazeOpts& o) {
  const auto trajs = read_trajectories_jsonl(o.trajectories, o.period_ms);
  const DisplacementStats d = displacement_stats(trajs, o.lag_ms, o.bins);
  const GazeDistribution g = gaze_distribution(trajs);
  nlohmann::ordered_json j;
  j["lag_ms"] = d.lag_ms;
  j["n_displacements"] = d.displacements.size();
  j["mle_rate"] = std::isinf(d.mle_rate) ? json("inf") : json(d.mle_rate);
  j["degenerate"] = d.degenerate;
  j["histogram"] = {{"bin_edges", d.histogram.bin_edges}, {"counts", d.histogram.counts}};
  j["gaze"] = {{"mean_x", g.mean_x}, {"mean_y", g.mean_y}, {"std_x", g.std_x}, {"std_y", g.std_y}};
  emit(o.out, j.dump(2) + "\n");
}

// ---- crop -----------------------------------------------------------------------------

struct CropOpts {
  std::string frames, trajectories, saliency, out;
  int size = 64;
};

void run_crop(const CropOpts& o) {
  const auto frames = read_grids(o.frames);
  std::vector<GazeXY> gaze;
  if (!o.saliency.empty()) {
    for (const auto& m : read_grids(o.saliency)) gaze.push_back(peak_gaze(m));
  } else if (!o.trajectories.empty()) {
    for (const auto& t : read_trajectories_jsonl(o.trajectories))
      for (const auto& p : t.points) gaze.push_back({p.x, p.y});
  } else {
    throw UsageError("crop needs --saliency or --trajectories");
  }
  if (gaze.size() != frames.size())
    throw InvalidInput("crop: " + std::to_string(frames.size()) + " frames but " +
                       std::to_string(gaze.size()) + " gaze points");
  std::vector<Grid> crops;
  for (std::size_t i = 0; i < frames.size(); ++i)
    crops.push_back(apply_crop(frames[i], crop_window(gaze[i], o.size,
                                                      static_cast<int>(frames[i].width),
                                                      static_cast<int>(frames[i].height))));
  write_grids(o.out, crops);
}

// ---- pairs ----------------------------------------------------------------------------

struct PairsOpts {
  std::string manifest, trajectories, out;
  double delta_t_s = 1.0, p = std::numeric_limits<double>::infinity();
  std::size_t count = 1000;
  std::uint64_t seed = 0;
};

void pairs_sample(const PairsOpts& o) {
  const FrameManifest m = read_manifest_jsonl(o.manifest);
  SamplerConfig cfg;
  cfg.delta_t_ms = o.delta_t_s * 1000.0;
  cfg.seed = o.seed;
  FixationMap fix;
  if (!o.trajectories.empty() && !std::isinf(o.p)) {
    cfg.fixation_constrained = true;
    cfg.velocity_threshold_p = o.p;
    fix = fixation_map(m, read_trajectories_jsonl(o.trajectories), o.p);
  }
  const auto pairs = sample_pairs(m, cfg, cfg.fixation_constrained ? &fix : nullptr, o.count);
  write_pairs_jsonl(o.out, pairs);
}

// ---- synth ----------------------------------------------------------------------------

void synth_gen(const WorldConfig& w, const std::string& out) {
  const SynthStream s = gen_stream(w);
  const fs::path dir(out);
  fs::create_directories(dir);
  write_manifest_jsonl(dir / "manifest.jsonl", s.manifest);
  write_trajectories_jsonl(dir / "trajectories.jsonl", s.trajectories);
  std::vector<Grid> images;
  images.reserve(s.frames.size());
  auto labels = open_out(dir / "labels.jsonl");
  for (const auto& f : s.frames) {
    images.push_back(f.image);
    labels << json{{"object_class", f.object_class}, {"context_class", f.context_class}}.dump()
           << '\n';
  }
  write_grids(dir / "frames.sgrd", images);
}

// ---- ssl ------------------------------------------------------------------------------

struct SslOpts {
  std::string manifest, frames, trajectories, out, model, labels, label_key = "object_class";
  std::string hidden = "32,8";
  double delta_t_s = 1.0, p = std::numeric_limits<double>::infinity();
  EncoderConfig enc{0, {}, 32, 64, Activation::relu};
  TrainConfig train;
};

void ssl_train(SslOpts o) {
  const FrameManifest m = read_manifest_jsonl(o.manifest);
  const Eigen::MatrixXd x = rows_from_grids(read_grids(o.frames));
  o.enc.input_dim = x.cols();
  o.enc.hidden_dims = parse_dims(o.hidden);
  SamplerConfig sc;
  sc.delta_t_ms = o.delta_t_s * 1000.0;
  sc.seed = derive_seed(o.train.seed, "sampler");
  FixationMap fix;
  if (!std::isinf(o.p)) {
    if (o.trajectories.empty()) throw UsageError("--p requires --trajectories");
    sc.fixation_constrained = true;
    sc.velocity_threshold_p = o.p;
    fix = fixation_map(m, read_trajectories_jsonl(o.trajectories), o.p);
  }
  const TrainResult r = train(m, x, sc, o.enc, o.train, sc.fixation_constrained ? &fix : nullptr);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_model(dir / "model.sscl", {o.enc, o.train, o.train.steps, r.params});
  write_metrics_csv((dir / "metrics.csv").string(), r.history);
}

void ssl_encode(const SslOpts& o) {
  const ModelCheckpoint ck = load_model(o.model);
  const Eigen::MatrixXd x = rows_from_grids(read_grids(o.frames));
  write_grids(o.out, std::vector<Grid>{
                         grid_from_matrix(encode_features(ck.params.theta_q, ck.encoder, x))});
}

void ssl_reps(const SslOpts& o) {
  const ModelCheckpoint ck = load_model(o.model);
  const Eigen::MatrixXd x = rows_from_grids(read_grids(o.frames));
  const auto labels = read_labels(o.labels, o.label_key);
  if (labels.size() != static_cast<std::size_t>(x.rows()))
    throw InvalidInput("ssl reps: one label per frame required");
  const auto layers = encode_layers(ck.params.theta_q, ck.encoder, x);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::map<std::string, std::vector<Eigen::VectorXd>> per;
    for (std::size_t i = 0; i < labels.size(); ++i)
      per["obj" + std::to_string(labels[i])].push_back(
          layers[l].row(static_cast<Eigen::Index>(i)).transpose());
    write_rep_matrix(dir / ("layer_" + std::to_string(l)), aggregate_object_reps(per));
  }
}

// ---- probe ----------------------------------------------------------------------------

struct ProbeOpts {
  std::string features, labels, label_key = "label", out, probe;
  ProbeConfig cfg;
};

void probe_train_cmd(const ProbeOpts& o) {
  const Eigen::MatrixXd x = read_features(o.features);
  const auto y = read_labels(o.labels, o.label_key);
  const ProbeFit fit = fit_probe(x, y, o.cfg);
  save_probe(o.out, fit.model);
  std::cout << "train_accuracy," << fmt(evaluate(fit.model, x, y)) << "\n";
}

void probe_eval_cmd(const ProbeOpts& o) {
  const ProbeModel m = load_probe(o.probe);
  const Eigen::MatrixXd x = read_features(o.features);
  const auto y = read_labels(o.labels, o.label_key);
  emit(o.out, "accuracy," + fmt(evaluate(m, x, y)) + "\n");
}

// ---- glove ----------------------------------------------------------------------------

struct GloveOpts {
  std::string cooc, annotations, reps, out;
  std::size_t seeds = 1;
  GloveConfig cfg;
};

void glove_train_cmd(const GloveOpts& o) {
  CoocMatrix x;
  if (!o.cooc.empty()) {
    x = read_cooc_csv(o.cooc);
  } else if (!o.annotations.empty()) {
    const auto ann = read_annotations_jsonl(o.annotations);
    std::set<std::string> vocab;
    for (const auto& a : ann) vocab.insert(a.labels.begin(), a.labels.end());
    x = build_cooc(ann, {vocab.begin(), vocab.end()});
  } else {
    throw UsageError("glove train needs --cooc or --annotations");
  }
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::string csv = "seed,epoch,loss\n";
  for (std::size_t k = 0; k < o.seeds; ++k) {
    GloveConfig c = o.cfg;
    c.seed = derive_seed(o.cfg.seed, k);
    const GloveFit fit = fit_glove(x, c);
    write_rep_matrix(dir / ("seed_" + std::to_string(k)),
                     {fit.model.labels, fit.model.embeddings});
    // Biases are needed to evaluate the fitted log-count predictor later.
    Eigen::MatrixXd b = fit.model.biases;
    write_grids(dir / ("seed_" + std::to_string(k) + ".bias.sgrd"),
                std::vector<Grid>{grid_from_matrix(b)});
    for (std::size_t e = 0; e < fit.epoch_loss.size(); ++e)
      csv += std::to_string(k) + "," + std::to_string(e) + "," + fmt(fit.epoch_loss[e]) + "\n";
  }
  auto os = open_out(dir / "loss.csv");
  os << csv;
}

std::vector<fs::path> rep_stems(const fs::path& dir, const std::string& prefix) {
  std::vector<fs::path> stems;
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + " is not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ".json")
      stems.push_back(e.path().parent_path() / e.path().stem());
  }
  // Numeric order of the suffix so that layer_10 follows layer_9.
  std::sort(stems.begin(), stems.end(), [&](const fs::path& a, const fs::path& b) {
    const auto na = std::stoul(a.filename().string().substr(prefix.size()));
    const auto nb = std::stoul(b.filename().string().substr(prefix.size()));
    return na < nb;
  });
  if (stems.empty()) throw FormatError("no " + prefix + "* representations in " + dir.string());
  return stems;
}

void glove_validate_cmd(const GloveOpts& o) {
  const CoocMatrix test = read_cooc_csv(o.cooc);
  std::string csv = "seed,pearson_r\n";
  std::size_t k = 0;
  for (const auto& stem : rep_stems(o.reps, "seed_")) {
    const RepMatrix r = read_rep_matrix(stem);
    GloveModel m{r.object_ids, r.features, {}};
    const Eigen::MatrixXd b =
        matrix_from_grid(read_single_grid(stem.string() + ".bias.sgrd"));
    m.biases = b.reshaped();
    const auto corr = validate_glove(m, test);
    csv += std::to_string(k++) + "," + (corr ? fmt(*corr) : std::string("nan")) + "\n";
  }
  emit(o.out, csv);
}

// ---- cka ------------------------------------------------------------------------------

struct CkaOpts {
  std::string model_reps, glove_reps, baseline_reps, out;
  bool per_layer = false;
  std::size_t seeds = 0;  // 0: all available
};

std::vector<double> concat_scores(const std::vector<RepMatrix>& layers,
                                  const std::vector<RepMatrix>& glove) {
  const RepMatrix cat = concat_layers(layers);
  std::vector<double> s;
  for (const auto& g : glove) s.push_back(linear_cka(cat, align_objects(cat, g)));
  return s;
}

void cka_cmd(const CkaOpts& o) {
  std::vector<RepMatrix> layers, glove;
  for (const auto& s : rep_stems(o.model_reps, "layer_")) layers.push_back(read_rep_matrix(s));
  auto gstems = rep_stems(o.glove_reps, "seed_");
  if (o.seeds > 0) {
    if (o.seeds > gstems.size()) throw InvalidInput("fewer GloVe seeds on disk than --seeds");
    gstems.resize(o.seeds);
  }
  for (const auto& s : gstems) glove.push_back(read_rep_matrix(s));

  std::string csv = "layer,seed,score\n";
  if (o.per_layer)
    for (std::size_t l = 0; l < layers.size(); ++l)
      for (std::size_t k = 0; k < glove.size(); ++k)
        csv += std::to_string(l) + "," + std::to_string(k) + "," +
               fmt(linear_cka(layers[l], align_objects(layers[l], glove[k]))) + "\n";
  const auto scores = concat_scores(layers, glove);
  for (std::size_t k = 0; k < scores.size(); ++k)
    csv += "concat," + std::to_string(k) + "," + fmt(scores[k]) + "\n";

  const MeanStd ms = mean_std(scores);
  std::string t = "nan", p = "nan", d = "nan";
  if (!o.baseline_reps.empty()) {
    std::vector<RepMatrix> base;
    for (const auto& s : rep_stems(o.baseline_reps, "layer_")) base.push_back(read_rep_matrix(s));
    const TTestResult r = paired_t_test(scores, concat_scores(base, glove));
    t = fmt(r.t);
    p = fmt(r.p);
    d = fmt(r.cohens_d);
  }
  csv += "mean,std,t,p,d\n" + fmt(ms.mean) + "," + fmt(ms.std) + "," + t + "," + p + "," + d +
         "\n";
  emit(o.out, csv);
}

// ---- experiment -----------------------------------------------------------------------

struct ExperimentOpts {
  std::string config, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void experiment_run(const ExperimentOpts& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  const auto summary = run_experiment(cfg);
  std::cout << "wrote " << (cfg.output_dir / "summary.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze-driven self-supervised learning toolkit"};
  app.require_subcommand(1);

  // gaze
  GazeOpts gz;
  auto* gaze = app.add_subcommand("gaze", "Gaze trajectories: extraction, fixations, statistics");
  gaze->require_subcommand(1);
  auto* gx = gaze->add_subcommand("extract", "Peak-saliency gaze per map");
  gx->add_option("--saliency", gz.saliency, "Saliency maps (grid file)")->required();
  gx->add_option("--video-id", gz.video_id);
  gx->add_option("--clip-id", gz.clip_id);
  gx->add_option("--period-ms", gz.period_ms);
  gx->add_option("--out", gz.out, "Trajectory JSON-lines")->required();
  auto* gs = gaze->add_subcommand("segment", "Velocity-threshold fixation segments (CSV)");
  gs->add_option("--trajectories", gz.trajectories)->required();
  gs->add_option("--p", gz.p, "Threshold in px per 200 ms");
  gs->add_option("--period-ms", gz.period_ms);
  gs->add_option("--out", gz.out);
  auto* gt = gaze->add_subcommand("stats", "Displacement histogram, exponential fit, gaze spread");
  gt->add_option("--trajectories", gz.trajectories)->required();
  gt->add_option("--lag-ms", gz.lag_ms);
  gt->add_option("--bins", gz.bins);
  gt->add_option("--period-ms", gz.period_ms);
  gt->add_option("--out", gz.out);

  CropOpts cr;
  auto* crop = app.add_subcommand("crop", "Square crops centred on the gaze");
  crop->add_option("--frames", cr.frames)->required();
  crop->add_option("--trajectories", cr.trajectories);
  crop->add_option("--saliency", cr.saliency);
  crop->add_option("--size", cr.size, "Crop side in pixels")->required();
  crop->add_option("--out", cr.out)->required();

  PairsOpts pr;
  auto* pairs = app.add_subcommand("pairs", "Temporal positive pairs");
  pairs->require_subcommand(1);
  auto* ps = pairs->add_subcommand("sample", "Sample (query, key) pairs");
  ps->add_option("--manifest", pr.manifest)->required();
  ps->add_option("--delta-t", pr.delta_t_s, "Window half-width in seconds");
  ps->add_option("--count", pr.count);
  ps->add_option("--trajectories", pr.trajectories, "Enables fixation-constrained pairing");
  ps->add_option("--p", pr.p, "Velocity threshold for fixation constraint");
  ps->add_option("--seed", pr.seed);
  ps->add_option("--out", pr.out)->required();

  WorldConfig world;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Synthetic gaze-annotated streams");
  synth->require_subcommand(1);
  auto* sg = synth->add_subcommand("gen", "Generate a stream");
  sg->add_option("--n-videos", world.n_videos);
  sg->add_option("--frames-per-video", world.frames_per_video);
  sg->add_option("--frame-period-ms", world.frame_period_ms);
  sg->add_option("--image-size", world.image_size);
  sg->add_option("--patch-size", world.patch_size);
  sg->add_option("--n-object-classes", world.n_object_classes);
  sg->add_option("--n-context-classes", world.n_context_classes);
  sg->add_option("--object-dwell-frames", world.object_dwell_frames);
  sg->add_option("--nuisance-dim", world.nuisance_dim);
  sg->add_option("--noise-std", world.noise_std);
  sg->add_option("--context-affinity", world.context_affinity);
  sg->add_option("--seed", world.seed);
  sg->add_option("--out", synth_out)->required();

  SslOpts so;
  auto* ssl = app.add_subcommand("ssl", "Time-contrastive training");
  ssl->require_subcommand(1);
  auto* st = ssl->add_subcommand("train", "Train query/momentum encoders");
  st->add_option("--manifest", so.manifest)->required();
  st->add_option("--frames", so.frames, "Inputs, one grid per manifest record")->required();
  st->add_option("--trajectories", so.trajectories);
  st->add_option("--delta-t", so.delta_t_s, "Window half-width in seconds");
  st->add_option("--p", so.p, "Fixation-constraint velocity threshold");
  st->add_option("--hidden-dims", so.hidden, "Comma-separated backbone widths");
  st->add_option("--embed-dim", so.enc.embed_dim);
  st->add_option("--proj-hidden-dim", so.enc.proj_hidden_dim);
  st->add_option("--tau", so.train.tau);
  st->add_option("--momentum-m", so.train.momentum_m);
  st->add_option("--learning-rate", so.train.learning_rate);
  st->add_option("--weight-decay", so.train.weight_decay);
  st->add_option("--batch-size", so.train.batch_size);
  st->add_option("--steps", so.train.steps);
  st->add_option("--augment-noise-std", so.train.augment_noise_std);
  st->add_flag("--symmetrize-loss", so.train.symmetrize_loss);
  st->add_option("--seed", so.train.seed);
  st->add_option("--out", so.out)->required();
  auto* se = ssl->add_subcommand("encode", "Backbone features for a stack of inputs");
  se->add_option("--model", so.model)->required();
  se->add_option("--frames", so.frames)->required();
  se->add_option("--out", so.out)->required();
  auto* sr = ssl->add_subcommand("reps", "Per-object mean activations of every backbone layer");
  sr->add_option("--model", so.model)->required();
  sr->add_option("--frames", so.frames)->required();
  sr->add_option("--labels", so.labels)->required();
  sr->add_option("--label-key", so.label_key);
  sr->add_option("--out", so.out)->required();

  ProbeOpts po;
  auto* probe = app.add_subcommand("probe", "Linear probes on frozen features");
  probe->require_subcommand(1);
  auto* pt = probe->add_subcommand("train", "Fit a softmax probe");
  pt->add_option("--features", po.features)->required();
  pt->add_option("--labels", po.labels)->required();
  pt->add_option("--label-key", po.label_key);
  pt->add_option("--learning-rate", po.cfg.learning_rate);
  pt->add_option("--l2-reg", po.cfg.l2_reg);
  pt->add_option("--epochs", po.cfg.epochs);
  pt->add_option("--batch-size", po.cfg.batch_size);
  pt->add_option("--classes", po.cfg.classes);
  pt->add_option("--seed", po.cfg.seed);
  pt->add_option("--out", po.out)->required();
  auto* pe = probe->add_subcommand("eval", "Accuracy of a fitted probe");
  pe->add_option("--probe", po.probe)->required();
  pe->add_option("--features", po.features)->required();
  pe->add_option("--labels", po.labels)->required();
  pe->add_option("--label-key", po.label_key);
  pe->add_option("--out", po.out);

  GloveOpts go;
  auto* glove = app.add_subcommand("glove", "Co-occurrence embeddings");
  glove->require_subcommand(1);
  auto* gtr = glove->add_subcommand("train", "Fit embeddings for several seeds");
  gtr->add_option("--cooc", go.cooc, "Co-occurrence CSV");
  gtr->add_option("--annotations", go.annotations, "Per-image label JSON-lines");
  gtr->add_option("--dim", go.cfg.dim);
  gtr->add_option("--alpha", go.cfg.alpha);
  gtr->add_option("--xmax-quantile", go.cfg.x_max_quantile);
  gtr->add_option("--learning-rate", go.cfg.learning_rate);
  gtr->add_option("--epochs", go.cfg.epochs);
  gtr->add_option("--seeds", go.seeds);
  gtr->add_option("--seed", go.cfg.seed);
  gtr->add_option("--out", go.out)->required();
  auto* gv = glove->add_subcommand("validate", "Held-out log-count correlation per seed");
  gv->add_option("--reps", go.reps)->required();
  gv->add_option("--cooc", go.cooc, "Held-out co-occurrence CSV")->required();
  gv->add_option("--out", go.out);

  CkaOpts co;
  auto* cka = app.add_subcommand("cka", "Linear CKA between model and GloVe representations");
  cka->add_option("--model-reps", co.model_reps)->required();
  cka->add_option("--glove-reps", co.glove_reps)->required();
  cka->add_option("--baseline-reps", co.baseline_reps, "Second model for the paired t-test");
  cka->add_flag("--per-layer", co.per_layer);
  cka->add_option("--seeds", co.seeds);
  cka->add_option("--out", co.out);

  ExperimentOpts eo;
  auto* exp = app.add_subcommand("experiment", "Reproducible experiment recipes");
  exp->require_subcommand(1);
  auto* er = exp->add_subcommand("run", "Run a recipe from a config file");
  er->add_option("--config", eo.config)->required();
  er->add_option("--seed", eo.seed)->each([&](const std::string&) { eo.seed_set = true; });
  er->add_option("--out", eo.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (gx->parsed()) gaze_extract(gz);
    else if (gs->parsed()) gaze_segment(gz);
    else if (gt->parsed()) gaze_stats(gz);
    else if (crop->parsed()) run_crop(cr);
    else if (ps->parsed()) pairs_sample(pr);
    else if (sg->parsed()) synth_gen(world, synth_out);
    else if (st->parsed()) ssl_train(so);
    else if (se->parsed()) ssl_encode(so);
    else if (sr->parsed()) ssl_reps(so);
    else if (pt->parsed()) probe_train_cmd(po);
    else if (pe->parsed()) probe_eval_cmd(po);
    else if (gtr->parsed()) glove_train_cmd(go);
    else if (gv->parsed()) glove_validate_cmd(go);
    else if (cka->parsed()) cka_cmd(co);
    else if (er->parsed()) experiment_run(eo);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
