#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gazessl/contrastive.hpp"
#include "gazessl/linear_probe.hpp"

namespace gazessl {

// "SSCL" container: magic, u32 format version, u64 header length, JSON header, then float64
// tensors (row-major, little-endian) in declaration order. Tensor shapes live in the header
// under "tensors" as [rows, cols] pairs; "kind" names the payload type.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Container {
  nlohmann::json header;
  std::vector<Eigen::MatrixXd> tensors;
};

void write_container(const std::filesystem::path& path, nlohmann::json header,
                     const std::vector<Eigen::MatrixXd>& tensors,
                     std::uint32_t version = kCheckpointVersion);
// Throws FormatError on any malformation (nothing partial is returned) and
// UnsupportedVersion for versions newer than kCheckpointVersion.
Container read_container(const std::filesystem::path& path);

struct ModelCheckpoint {
  EncoderConfig encoder;
  TrainConfig training;
  std::size_t step = 0;
  ModelParams params;
};

void save_model(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_model(const std::filesystem::path& path);

void save_probe(const std::filesystem::path& path, const ProbeModel& model);
ProbeModel load_probe(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const EncoderConfig& cfg);
nlohmann::ordered_json to_json(const TrainConfig& cfg);

}  // namespace gazessl
