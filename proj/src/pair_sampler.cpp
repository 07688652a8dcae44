#include "gazessl/pair_sampler.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "gazessl/error.hpp"

namespace gazessl {

namespace {

constexpr std::size_t kClipFrames = 25;
constexpr std::size_t kSequenceFrames = 8;

std::map<std::string, std::vector<std::size_t>> group_by_video(const FrameManifest& m) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < m.records.size(); ++i) out[m.records[i].video_id].push_back(i);
  return out;
}

}  // namespace

void validate(const FrameManifest& manifest) {
  std::set<std::pair<std::string, int>> seen;
  std::unordered_map<std::string, double> last_ts;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    require(seen.emplace(r.video_id, r.frame_idx).second, "manifest",
            "duplicate (video_id, frame_idx) at record " + std::to_string(i));
    auto [it, inserted] = last_ts.try_emplace(r.video_id, r.timestamp_ms);
    if (!inserted) {
      require(r.timestamp_ms >= it->second, "manifest",
              "timestamps decrease within video '" + r.video_id + "' at record " +
                  std::to_string(i));
      it->second = r.timestamp_ms;
    }
  }
}

std::vector<std::vector<std::size_t>> split_clips(std::size_t n_frames) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t clip = 0; clip < n_frames; clip += kClipFrames) {
    const std::size_t len = std::min(kClipFrames, n_frames - clip);
    const std::size_t usable = std::min<std::size_t>(len, 3 * kSequenceFrames);
    for (std::size_t s = 0; s + kSequenceFrames <= usable; s += kSequenceFrames) {
      auto& seq = out.emplace_back(kSequenceFrames);
      for (std::size_t k = 0; k < kSequenceFrames; ++k) seq[k] = clip + s + k;
    }
  }
  return out;
}

FixationMap fixation_map(const FrameManifest& manifest, std::span<const GazeTrajectory> trajs,
                         double p) {
  const auto groups = group_by_video(manifest);
  // Per video: frame_idx -> (segment label); labels unique across clips of a video.
  std::map<std::string, std::map<int, std::size_t>> label_of;
  std::map<std::string, std::size_t> next_label;
  for (const auto& t : trajs) {
    auto segs = segment_fixations(t, p);
    auto& labels = label_of[t.video_id];
    auto& next = next_label[t.video_id];
    for (const auto& s : segs) {
      for (std::size_t i = s.start_idx; i <= s.end_idx; ++i)
        labels[t.points[i].frame_idx] = next;
      ++next;
    }
  }
  FixationMap out;
  for (const auto& [vid, idx] : groups) {
    auto lit = label_of.find(vid);
    require(lit != label_of.end(), "fixation_map", "no trajectory for video '" + vid + "'");
    auto& segs = out[vid];
    std::size_t prev_label = 0;
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
      const auto& rec = manifest.records[idx[pos]];
      auto f = lit->second.find(rec.frame_idx);
      require(f != lit->second.end(), "fixation_map",
              "no gaze point for video '" + vid + "' frame " + std::to_string(rec.frame_idx));
      if (pos == 0 || f->second != prev_label)
        segs.push_back({pos, pos});
      else
        segs.back().end_idx = pos;
      prev_label = f->second;
    }
  }
  return out;
}

PairSampler::PairSampler(const FrameManifest& manifest, const SamplerConfig& cfg,
                         const FixationMap* fixations) {
  require(!manifest.records.empty(), "PairSampler", "manifest is empty");
  require(cfg.delta_t_ms >= 0.0, "PairSampler", "delta_t_ms must be non-negative");
  require(!cfg.fixation_constrained || fixations != nullptr, "PairSampler",
          "fixation-constrained sampling needs fixation segments");
  validate(manifest);

  const std::size_t n = manifest.records.size();
  video_of_.resize(n);
  first_.resize(n);
  last_.resize(n);
  for (auto& [vid, idx] : group_by_video(manifest)) {
    const std::size_t v = videos_.size();
    std::vector<double> ts(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) {
      ts[p] = manifest.records[idx[p]].timestamp_ms;
      video_of_[idx[p]] = v;
    }
    std::vector<std::size_t> seg_first(idx.size()), seg_last(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) seg_first[p] = 0, seg_last[p] = idx.size() - 1;
    if (cfg.fixation_constrained) {
      auto fit = fixations->find(vid);
      require(fit != fixations->end(), "PairSampler", "no fixations for video '" + vid + "'");
      std::vector<bool> covered(idx.size(), false);
      for (const auto& s : fit->second) {
        require(s.start_idx <= s.end_idx && s.end_idx < idx.size(), "PairSampler",
                "fixation segment out of range for video '" + vid + "'");
        for (std::size_t p = s.start_idx; p <= s.end_idx; ++p) {
          require(!covered[p], "PairSampler", "overlapping fixation segments in '" + vid + "'");
          covered[p] = true;
          seg_first[p] = s.start_idx;
          seg_last[p] = s.end_idx;
        }
      }
      require(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }),
              "PairSampler", "fixation segments do not cover video '" + vid + "'");
    }
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const auto lo = static_cast<std::size_t>(
          std::lower_bound(ts.begin(), ts.end(), ts[p] - cfg.delta_t_ms) - ts.begin());
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(ts.begin(), ts.end(), ts[p] + cfg.delta_t_ms) - ts.begin() - 1);
      first_[idx[p]] = std::max(lo, seg_first[p]);
      last_[idx[p]] = std::min(hi, seg_last[p]);
    }
    videos_.push_back(std::move(idx));
  }
}

std::size_t PairSampler::sample_key(std::size_t query_idx, Rng& rng) const {
  require(query_idx < size(), "PairSampler", "query index out of range");
  std::uniform_int_distribution<std::size_t> pick(first_[query_idx], last_[query_idx]);
  return videos_[video_of_[query_idx]][pick(rng)];
}

PairSpec PairSampler::sample_one(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> query(0, size() - 1);
  const std::size_t q = query(rng);
  return {q, sample_key(q, rng)};
}

std::vector<PairSpec> PairSampler::sample(std::size_t count, Rng& rng) const {
  std::vector<PairSpec> out(count);
  for (auto& p : out) p = sample_one(rng);
  return out;
}

std::vector<std::size_t> PairSampler::candidates(std::size_t query_idx) const {
  require(query_idx < size(), "PairSampler", "query index out of range");
  const auto& vid = videos_[video_of_[query_idx]];
  return {vid.begin() + static_cast<std::ptrdiff_t>(first_[query_idx]),
          vid.begin() + static_cast<std::ptrdiff_t>(last_[query_idx]) + 1};
}

std::vector<PairSpec> sample_pairs(const FrameManifest& manifest, const SamplerConfig& cfg,
                                   const FixationMap* fixations, std::size_t count) {
  PairSampler sampler(manifest, cfg, fixations);
  Rng rng(cfg.seed);
  return sampler.sample(count, rng);
}

void write_manifest_jsonl(const std::filesystem::path& path, const FrameManifest& manifest) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& r : manifest.records) {
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    j["clip_id"] = r.clip_id;
    j["frame_idx"] = r.frame_idx;
    j["timestamp_ms"] = r.timestamp_ms;
    j["payload_ref"] = r.payload_ref;
    os << j.dump() << '\n';
  }
}

FrameManifest read_manifest_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  FrameManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      m.records.push_back({j.at("video_id").get<std::string>(), j.at("clip_id").get<std::string>(),
                           j.at("frame_idx").get<int>(), j.at("timestamp_ms").get<double>(),
                           j.at("payload_ref").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(m);
  return m;
}

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const PairSpec> pairs) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& p : pairs)
    os << "{\"query_idx\":" << p.query_idx << ",\"key_idx\":" << p.key_idx << "}\n";
}

}  // namespace gazessl
