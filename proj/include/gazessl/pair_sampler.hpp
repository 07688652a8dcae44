#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gazessl/gaze_stream.hpp"
#include "gazessl/rng.hpp"

namespace gazessl {

struct FrameRecord {
  std::string video_id;
  std::string clip_id;
  int frame_idx = 0;
  double timestamp_ms = 0.0;
  std::string payload_ref;
  bool operator==(const FrameRecord&) const = default;
};

struct FrameManifest {
  std::vector<FrameRecord> records;
  bool operator==(const FrameManifest&) const = default;
};

struct PairSpec {
  std::size_t query_idx = 0;
  std::size_t key_idx = 0;
  bool operator==(const PairSpec&) const = default;
};

struct SamplerConfig {
  double delta_t_ms = 0.0;
  bool fixation_constrained = false;
  double velocity_threshold_p = std::numeric_limits<double>::infinity();  // px per 200 ms
  std::uint64_t seed = 0;
};

// Fixation segments per video_id. Indices are positions among that video's records, in
// manifest order.
using FixationMap = std::map<std::string, std::vector<FixationSegment>>;

// (video_id, frame_idx) unique; timestamps non-decreasing within each video.
void validate(const FrameManifest& manifest);

// Per 25-frame clip keep frames 0..23 as three 8-frame sequences and drop frame 24. A trailing
// partial clip is truncated to a multiple of 8. Returns indices into the input.
std::vector<std::vector<std::size_t>> split_clips(std::size_t n_frames);

template <class T>
std::vector<std::vector<T>> split_clips(std::span<const T> frames) {
  std::vector<std::vector<T>> out;
  for (const auto& seq : split_clips(frames.size())) {
    auto& dst = out.emplace_back();
    dst.reserve(seq.size());
    for (std::size_t i : seq) dst.push_back(frames[i]);
  }
  return out;
}

// Segments each trajectory at threshold p and maps the segments onto manifest positions by
// (video_id, frame_idx). Segments never span two clips of the same video.
FixationMap fixation_map(const FrameManifest& manifest, std::span<const GazeTrajectory> trajs,
                         double p);

// Samples temporal positive pairs. The key for a query is uniform over records of the same
// video within [t - dt, t + dt] (the query included), further restricted to the query's
// fixation segment when the config asks for it.
class PairSampler {
 public:
  PairSampler(const FrameManifest& manifest, const SamplerConfig& cfg,
              const FixationMap* fixations = nullptr);

  std::size_t size() const { return first_.size(); }
  PairSpec sample_one(Rng& rng) const;
  std::size_t sample_key(std::size_t query_idx, Rng& rng) const;
  std::vector<PairSpec> sample(std::size_t count, Rng& rng) const;
  // Record indices eligible as keys for the given query, ascending.
  std::vector<std::size_t> candidates(std::size_t query_idx) const;

 private:
  std::vector<std::vector<std::size_t>> videos_;  // record indices per video, manifest order
  std::vector<std::size_t> video_of_;
  std::vector<std::size_t> first_;  // candidate range [first_, last_] as positions in the video
  std::vector<std::size_t> last_;
};

std::vector<PairSpec> sample_pairs(const FrameManifest& manifest, const SamplerConfig& cfg,
                                   const FixationMap* fixations, std::size_t count);

void write_manifest_jsonl(const std::filesystem::path& path, const FrameManifest& manifest);
FrameManifest read_manifest_jsonl(const std::filesystem::path& path);

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const PairSpec> pairs);

}  // namespace gazessl
