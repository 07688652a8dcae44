#include "gazessl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "gazessl/checkpoint.hpp"
#include "gazessl/error.hpp"

namespace gazessl {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  if (v == "inf" || v == "+inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size() || std::isnan(d)) throw std::invalid_argument("not a number");
  return d;
}

std::uint64_t parse_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw std::invalid_argument("not a non-negative integer");
  return out;
}

int parse_int(const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw std::invalid_argument("not an integer");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false");
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

ViewSpec::Kind parse_kind(const std::string& v) {
  if (v == "gaze_crop") return ViewSpec::Kind::gaze_crop;
  if (v == "center_crop") return ViewSpec::Kind::center_crop;
  if (v == "full_frame") return ViewSpec::Kind::full_frame;
  throw std::invalid_argument("expected gaze_crop, center_crop or full_frame");
}

using Setter = std::function<void(const std::string&)>;
using Table = std::map<std::string, std::map<std::string, Setter>>;

Table make_table(ExperimentConfig& c) {
  auto size = [](std::size_t& dst) { return [&dst](const std::string& v) { dst = parse_uint(v); }; };
  auto integer = [](int& dst) { return [&dst](const std::string& v) { dst = parse_int(v); }; };
  auto real = [](double& dst) { return [&dst](const std::string& v) { dst = parse_double(v); }; };
  auto flag = [](bool& dst) { return [&dst](const std::string& v) { dst = parse_bool(v); }; };

  Table t;
  t["experiment"] = {
      {"recipe", [&c](const std::string& v) { c.recipe = v; }},
      {"seed", [&c](const std::string& v) { c.seed = parse_uint(v); }},
      {"output_dir", [&c](const std::string& v) { c.output_dir = v; }},
      {"repeats", size(c.repeats)},
  };
  auto& w = c.world;
  t["world"] = {
      {"n_videos", size(w.n_videos)},
      {"frames_per_video", size(w.frames_per_video)},
      {"frame_period_ms", real(w.frame_period_ms)},
      {"image_size", integer(w.image_size)},
      {"patch_size", integer(w.patch_size)},
      {"n_object_classes", integer(w.n_object_classes)},
      {"n_context_classes", integer(w.n_context_classes)},
      {"object_dwell_frames", integer(w.object_dwell_frames)},
      {"nuisance_dim", integer(w.nuisance_dim)},
      {"noise_std", real(w.noise_std)},
      {"object_amplitude", real(w.object_amplitude)},
      {"context_amplitude", real(w.context_amplitude)},
      {"context_affinity", real(w.context_affinity)},
      {"fixation_jitter_px", real(w.fixation_jitter_px)},
  };
  t["view"] = {
      {"kind", [&c](const std::string& v) { c.view.kind = parse_kind(v); }},
      {"crop_size", integer(c.view.crop_size)},
      {"input_size", integer(c.view.input_size)},
  };
  t["sampler"] = {
      {"delta_t_ms", real(c.sampler.delta_t_ms)},
      {"fixation_constrained", flag(c.sampler.fixation_constrained)},
      {"velocity_threshold_p", real(c.sampler.velocity_threshold_p)},
  };
  t["encoder"] = {
      {"hidden_dims",
       [&c](const std::string& v) {
         c.encoder.hidden_dims.clear();
         for (double d : parse_list(v)) {
           if (d <= 0 || d != std::floor(d)) throw std::invalid_argument("dims must be positive");
           c.encoder.hidden_dims.push_back(static_cast<Eigen::Index>(d));
         }
       }},
      {"embed_dim", [&c](const std::string& v) { c.encoder.embed_dim = parse_int(v); }},
      {"proj_hidden_dim", [&c](const std::string& v) { c.encoder.proj_hidden_dim = parse_int(v); }},
      {"activation",
       [&c](const std::string& v) {
         if (v != "relu") throw std::invalid_argument("only relu is supported");
         c.encoder.activation = Activation::relu;
       }},
  };
  auto& tr = c.training;
  t["training"] = {
      {"tau", real(tr.tau)},
      {"momentum_m", real(tr.momentum_m)},
      {"learning_rate", real(tr.learning_rate)},
      {"weight_decay", real(tr.weight_decay)},
      {"batch_size", size(tr.batch_size)},
      {"steps", size(tr.steps)},
      {"augment_noise_std", real(tr.augment_noise_std)},
      {"symmetrize_loss", flag(tr.symmetrize_loss)},
  };
  t["probe"] = {
      {"learning_rate", real(c.probe.learning_rate)},
      {"l2_reg", real(c.probe.l2_reg)},
      {"epochs", size(c.probe.epochs)},
      {"batch_size", size(c.probe.batch_size)},
      {"train_videos", size(c.probe_train_videos)},
      {"test_videos", size(c.probe_test_videos)},
  };
  t["glove"] = {
      {"dim", integer(c.glove.dim)},
      {"alpha", real(c.glove.alpha)},
      {"x_max_quantile", real(c.glove.x_max_quantile)},
      {"learning_rate", real(c.glove.learning_rate)},
      {"epochs", size(c.glove.epochs)},
  };
  t["cka"] = {
      {"glove_seeds", size(c.cka.glove_seeds)},
      {"baseline_delta_t_ms", real(c.cka.baseline_delta_t_ms)},
  };
  t["sweep"] = {
      {"values", [&c](const std::string& v) { c.sweep = parse_list(v); }},
  };
  return t;
}

}  // namespace

std::string to_string(ViewSpec::Kind kind) {
  switch (kind) {
    case ViewSpec::Kind::gaze_crop: return "gaze_crop";
    case ViewSpec::Kind::center_crop: return "center_crop";
    case ViewSpec::Kind::full_frame: return "full_frame";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  Table table = make_table(cfg);
  std::set<std::string> seen;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(lineno) + ": " + msg, lineno);
  };
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!table.contains(section)) throw fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value'");
    if (section.empty()) throw fail("key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    auto it = table[section].find(key);
    if (it == table[section].end()) throw fail("unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(full).second) throw fail("duplicate key '" + full + "'");
    if (value.empty()) throw fail("empty value for '" + full + "'");
    try {
      it->second(value);
    } catch (const std::exception& e) {
      throw fail("bad value '" + value + "' for '" + full + "': " + e.what());
    }
  }
  for (const char* req : {"experiment.recipe", "experiment.seed", "experiment.output_dir"})
    if (!seen.contains(req))
      throw ConfigError(source + ": missing required key '" + std::string(req) + "'");
  if (std::find(known_recipes().begin(), known_recipes().end(), cfg.recipe) ==
      known_recipes().end())
    throw ConfigError(source + ": unknown recipe '" + cfg.recipe + "'");
  try {
    validate(cfg);
  } catch (const InvalidInput& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.world);
  require(cfg.repeats > 0, "experiment", "repeats must be positive");
  require(cfg.probe_train_videos > 0 && cfg.probe_test_videos > 0, "probe",
          "probe video counts must be positive");
  require(cfg.view.crop_size > 0 && cfg.view.input_size > 0, "view", "sizes must be positive");
  const int crop =
      cfg.view.kind == ViewSpec::Kind::full_frame ? cfg.world.image_size : cfg.view.crop_size;
  require(crop <= cfg.world.image_size, "view", "crop_size exceeds image_size");
  require(crop % cfg.view.input_size == 0, "view", "crop size must be a multiple of input_size");
  require(cfg.sampler.delta_t_ms >= 0.0, "sampler", "delta_t_ms must be non-negative");
  require(cfg.sampler.velocity_threshold_p > 0.0, "sampler", "velocity threshold must be positive");
  EncoderConfig enc = cfg.encoder;
  enc.input_dim = static_cast<Eigen::Index>(cfg.view.input_size) * cfg.view.input_size;
  validate(enc);
  validate(cfg.training);
  require(cfg.probe.learning_rate > 0 && cfg.probe.batch_size > 0 && cfg.probe.l2_reg >= 0,
          "probe", "invalid probe settings");
  require(cfg.glove.dim > 0 && cfg.glove.learning_rate > 0 && cfg.glove.x_max_quantile > 0 &&
              cfg.glove.x_max_quantile <= 1,
          "glove", "invalid glove settings");
  require(cfg.cka.glove_seeds >= 2, "cka", "need at least two GloVe seeds");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = {{"recipe", c.recipe}, {"seed", c.seed}, {"repeats", c.repeats}};
  const auto& w = c.world;
  j["world"] = {{"n_videos", w.n_videos},
                {"frames_per_video", w.frames_per_video},
                {"frame_period_ms", w.frame_period_ms},
                {"image_size", w.image_size},
                {"patch_size", w.patch_size},
                {"n_object_classes", w.n_object_classes},
                {"n_context_classes", w.n_context_classes},
                {"object_dwell_frames", w.object_dwell_frames},
                {"nuisance_dim", w.nuisance_dim},
                {"noise_std", w.noise_std},
                {"object_amplitude", w.object_amplitude},
                {"context_amplitude", w.context_amplitude},
                {"context_affinity", w.context_affinity},
                {"fixation_jitter_px", w.fixation_jitter_px}};
  j["view"] = {{"kind", to_string(c.view.kind)},
               {"crop_size", c.view.crop_size},
               {"input_size", c.view.input_size}};
  j["sampler"] = {{"delta_t_ms", c.sampler.delta_t_ms},
                  {"fixation_constrained", c.sampler.fixation_constrained},
                  {"velocity_threshold_p", std::isinf(c.sampler.velocity_threshold_p)
                                               ? nlohmann::ordered_json("inf")
                                               : nlohmann::ordered_json(c.sampler.velocity_threshold_p)}};
  j["encoder"] = to_json(c.encoder);
  j["training"] = to_json(c.training);
  j["probe"] = {{"learning_rate", c.probe.learning_rate},
                {"l2_reg", c.probe.l2_reg},
                {"epochs", c.probe.epochs},
                {"batch_size", c.probe.batch_size},
                {"train_videos", c.probe_train_videos},
                {"test_videos", c.probe_test_videos}};
  j["glove"] = {{"dim", c.glove.dim},
                {"alpha", c.glove.alpha},
                {"x_max_quantile", c.glove.x_max_quantile},
                {"learning_rate", c.glove.learning_rate},
                {"epochs", c.glove.epochs}};
  j["cka"] = {{"glove_seeds", c.cka.glove_seeds},
              {"baseline_delta_t_ms", c.cka.baseline_delta_t_ms}};
  auto sweep = nlohmann::ordered_json::array();
  for (double v : c.sweep)
    sweep.push_back(std::isinf(v) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(v));
  j["sweep"] = sweep;
  return j;
}

}  // namespace gazessl
