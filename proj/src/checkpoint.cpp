#include "gazessl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gazessl/error.hpp"

namespace gazessl {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'C', 'L'};

template <class U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class U>
U get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<U>(v);
}

std::string activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw FormatError("checkpoint: unknown activation '" + s + "'");
}

nlohmann::json describe(const Mlp& net) {
  auto layers = nlohmann::json::array();
  for (const auto& l : net.layers)
    layers.push_back({{"in", l.weight.cols()},
                      {"out", l.weight.rows()},
                      {"activation", activation_name(l.activation)}});
  return layers;
}

void append_tensors(const Mlp& net, std::vector<Eigen::MatrixXd>& out) {
  for (const auto& l : net.layers) {
    out.push_back(l.weight);
    out.push_back(Eigen::MatrixXd(l.bias));
  }
}

Mlp rebuild(const nlohmann::json& layers, const std::vector<Eigen::MatrixXd>& tensors,
            std::size_t& cursor) {
  Mlp net;
  for (const auto& jl : layers) {
    if (cursor + 2 > tensors.size()) throw FormatError("checkpoint: missing layer tensors");
    Dense d;
    d.weight = tensors[cursor++];
    const Eigen::MatrixXd& b = tensors[cursor++];
    if (d.weight.rows() != jl.at("out").get<Eigen::Index>() ||
        d.weight.cols() != jl.at("in").get<Eigen::Index>() || b.cols() != 1 ||
        b.rows() != d.weight.rows())
      throw FormatError("checkpoint: layer tensor shape mismatch");
    d.bias = b.col(0);
    d.activation = activation_from(jl.at("activation").get<std::string>());
    net.layers.push_back(std::move(d));
  }
  return net;
}

}  // namespace

void write_container(const std::filesystem::path& path, nlohmann::json header,
                     const std::vector<Eigen::MatrixXd>& tensors, std::uint32_t version) {
  auto shapes = nlohmann::json::array();
  for (const auto& t : tensors) shapes.push_back({t.rows(), t.cols()});
  header["tensors"] = shapes;
  const std::string text = header.dump();

  std::string buf(kMagic, 4);
  put_le<std::uint32_t>(buf, version);
  put_le<std::uint64_t>(buf, text.size());
  buf += text;
  for (const auto& t : tensors)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c)
        put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(t(r, c)));

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw FormatError("checkpoint: write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::vector<unsigned char> raw((std::istreambuf_iterator<char>(is)),
                                       std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  if (raw.size() < 16) throw FormatError(where + "truncated preamble");
  if (std::memcmp(raw.data(), kMagic, 4) != 0) throw FormatError(where + "bad magic");
  const auto version = get_le<std::uint32_t>(raw.data() + 4);
  if (version == 0) throw FormatError(where + "invalid version 0");
  if (version > kCheckpointVersion)
    throw UnsupportedVersion(where + "format version " + std::to_string(version) +
                             " is newer than supported version " +
                             std::to_string(kCheckpointVersion));
  const auto hlen = get_le<std::uint64_t>(raw.data() + 8);
  if (hlen > raw.size() - 16) throw FormatError(where + "truncated header");

  Container c;
  try {
    c.header = nlohmann::json::parse(raw.begin() + 16,
                                     raw.begin() + 16 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "header is not valid JSON: " + e.what());
  }
  std::size_t offset = 16 + hlen;
  try {
    for (const auto& shape : c.header.at("tensors")) {
      const auto rows = shape.at(0).get<std::int64_t>();
      const auto cols = shape.at(1).get<std::int64_t>();
      if (rows < 0 || cols < 0) throw FormatError(where + "negative tensor shape");
      const auto count = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
      if (count > (raw.size() - offset) / 8) throw FormatError(where + "truncated tensor data");
      Eigen::MatrixXd t(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index col = 0; col < cols; ++col) {
          t(r, col) = std::bit_cast<double>(get_le<std::uint64_t>(raw.data() + offset));
          offset += 8;
        }
      c.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "bad tensor table: " + e.what());
  }
  if (offset != raw.size()) throw FormatError(where + "trailing bytes after tensors");
  return c;
}

nlohmann::ordered_json to_json(const EncoderConfig& cfg) {
  return {{"input_dim", cfg.input_dim},
          {"hidden_dims", cfg.hidden_dims},
          {"embed_dim", cfg.embed_dim},
          {"proj_hidden_dim", cfg.proj_hidden_dim},
          {"activation", activation_name(cfg.activation)}};
}

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  return {{"tau", cfg.tau},
          {"momentum_m", cfg.momentum_m},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"batch_size", cfg.batch_size},
          {"steps", cfg.steps},
          {"seed", cfg.seed},
          {"augment_noise_std", cfg.augment_noise_std},
          {"symmetrize_loss", cfg.symmetrize_loss}};
}

void save_model(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  require(ckpt.params.theta_q.same_shape(ckpt.params.theta_k), "save_model",
          "theta_q and theta_k shapes differ");
  nlohmann::json h;
  h["kind"] = "ssl_model";
  h["encoder"] = to_json(ckpt.encoder);
  h["training"] = to_json(ckpt.training);
  h["step"] = ckpt.step;
  h["seed"] = ckpt.training.seed;
  h["layers"] = describe(ckpt.params.theta_q);
  std::vector<Eigen::MatrixXd> tensors;
  append_tensors(ckpt.params.theta_q, tensors);
  append_tensors(ckpt.params.theta_k, tensors);
  write_container(path, std::move(h), tensors);
}

ModelCheckpoint load_model(const std::filesystem::path& path) {
  const Container c = read_container(path);
  try {
    if (c.header.at("kind") != "ssl_model")
      throw FormatError("checkpoint " + path.string() + ": not an ssl_model checkpoint");
    ModelCheckpoint m;
    const auto& e = c.header.at("encoder");
    m.encoder.input_dim = e.at("input_dim").get<Eigen::Index>();
    m.encoder.hidden_dims = e.at("hidden_dims").get<std::vector<Eigen::Index>>();
    m.encoder.embed_dim = e.at("embed_dim").get<Eigen::Index>();
    m.encoder.proj_hidden_dim = e.at("proj_hidden_dim").get<Eigen::Index>();
    m.encoder.activation = activation_from(e.at("activation").get<std::string>());
    const auto& t = c.header.at("training");
    m.training.tau = t.at("tau").get<double>();
    m.training.momentum_m = t.at("momentum_m").get<double>();
    m.training.learning_rate = t.at("learning_rate").get<double>();
    m.training.weight_decay = t.at("weight_decay").get<double>();
    m.training.batch_size = t.at("batch_size").get<std::size_t>();
    m.training.steps = t.at("steps").get<std::size_t>();
    m.training.seed = t.at("seed").get<std::uint64_t>();
    m.training.augment_noise_std = t.at("augment_noise_std").get<double>();
    m.training.symmetrize_loss = t.at("symmetrize_loss").get<bool>();
    m.step = c.header.at("step").get<std::size_t>();
    std::size_t cursor = 0;
    m.params.theta_q = rebuild(c.header.at("layers"), c.tensors, cursor);
    m.params.theta_k = rebuild(c.header.at("layers"), c.tensors, cursor);
    if (cursor != c.tensors.size()) throw FormatError("checkpoint: unexpected extra tensors");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": bad header: " + e.what());
  }
}

void save_probe(const std::filesystem::path& path, const ProbeModel& model) {
  require(model.bias.size() == model.weights.rows(), "save_probe", "bias/weight mismatch");
  nlohmann::json h;
  h["kind"] = "linear_probe";
  h["classes"] = model.weights.rows();
  h["feature_dim"] = model.weights.cols();
  write_container(path, std::move(h), {model.weights, Eigen::MatrixXd(model.bias)});
}

ProbeModel load_probe(const std::filesystem::path& path) {
  const Container c = read_container(path);
  if (c.header.value("kind", "") != "linear_probe")
    throw FormatError("checkpoint " + path.string() + ": not a linear_probe checkpoint");
  if (c.tensors.size() != 2 || c.tensors[1].cols() != 1 ||
      c.tensors[1].rows() != c.tensors[0].rows())
    throw FormatError("checkpoint " + path.string() + ": bad probe tensors");
  return {c.tensors[0], c.tensors[1].col(0)};
}

}  // namespace gazessl
