#include "forgepipe/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "forgepipe/error.hpp"

namespace forgepipe {
namespace {

std::unordered_map<std::string, const VideoManifestEntry*> index_manifest(
    std::span<const VideoManifestEntry> manifest) {
  std::unordered_map<std::string, const VideoManifestEntry*> index;
  for (const auto& e : manifest) index.emplace(e.video_id, &e);
  return index;
}

}  // namespace

VideoVerdict aggregate_video(std::span<const ScoreRecord> scores) {
  if (scores.empty()) throw Error(Errc::EmptyScores, "no clip scores to aggregate");
  std::map<std::int64_t, std::vector<double>> tracks;
  for (const auto& r : scores) {
    if (r.video_id != scores.front().video_id) {
      throw Error(Errc::InvariantError, "aggregate_video got scores from several videos");
    }
    if (!(r.score >= 0.0f && r.score <= 1.0f)) {
      throw Error(Errc::ScoreOutOfRange, "clip score outside [0, 1]");
    }
    tracks[r.track_id].push_back(r.score);
  }
  VideoVerdict v;
  v.video_id = scores.front().video_id;
  v.num_clips_used = scores.size();
  v.num_tracks = tracks.size();
  v.video_score = 0.0;
  for (auto& [id, values] : tracks) {
    // Sorting makes the sum independent of input order.
    std::sort(values.begin(), values.end());
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    v.video_score = std::max(v.video_score, mean);
  }
  return v;
}

std::vector<VideoVerdict> aggregate_videos(std::span<const ScoreRecord> scores,
                                           std::span<const VideoManifestEntry> manifest) {
  const auto index = index_manifest(manifest);
  std::map<std::string, std::vector<ScoreRecord>> by_video;
  for (const auto& r : scores) by_video[r.video_id].push_back(r);
  std::vector<VideoVerdict> out;
  out.reserve(by_video.size());
  for (const auto& [id, records] : by_video) {
    const auto it = index.find(id);
    if (it == index.end()) throw Error(Errc::UnknownVideoId, "video not in manifest: " + id);
    VideoVerdict v = aggregate_video(records);
    v.label = it->second->label == Label::Fake ? 1 : 0;
    out.push_back(std::move(v));
  }
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(Errc::DimensionMismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum stays integral with midranks.
  std::uint64_t twice_rank_sum = 0;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j, midrank (i + 1 + j) / 2.
    const std::uint64_t twice_mid = i + 1 + j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        twice_rank_sum += twice_mid;
        ++pos;
      }
    }
    i = j;
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error(Errc::SingleClass, "AUC needs both classes");
  // U = R - P(P+1)/2; AUC = U / (P N) = (2R - P(P+1)) / (2 P N).
  const std::uint64_t twice_u = twice_rank_sum - pos * (pos + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * pos * neg);
}

double roc_auc(std::span<const VideoVerdict> verdicts) {
  std::vector<double> s;
  std::vector<int> l;
  s.reserve(verdicts.size());
  l.reserve(verdicts.size());
  for (const auto& v : verdicts) {
    s.push_back(v.video_score);
    l.push_back(v.label);
  }
  return roc_auc(s, l);
}

double accuracy(std::span<const VideoVerdict> verdicts, double threshold) {
  if (verdicts.empty()) throw Error(Errc::EmptyScores, "accuracy of an empty set");
  std::size_t correct = 0;
  for (const auto& v : verdicts) {
    if ((v.video_score >= threshold) == (v.label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

std::vector<VideoVerdict> filter_category(std::span<const VideoVerdict> verdicts,
                                          std::span<const VideoManifestEntry> manifest,
                                          const ManifestPredicate& exclude) {
  const auto index = index_manifest(manifest);
  std::vector<VideoVerdict> out;
  for (const auto& v : verdicts) {
    const auto it = index.find(v.video_id);
    if (it == index.end()) throw Error(Errc::UnknownVideoId, "video not in manifest: " + v.video_id);
    if (exclude && exclude(*it->second)) continue;
    out.push_back(v);
  }
  return out;
}

ManifestPredicate has_any_tag(std::vector<std::string> tags) {
  return [tags = std::move(tags)](const VideoManifestEntry& e) {
    return std::any_of(e.tags.begin(), e.tags.end(), [&](const std::string& t) {
      return std::find(tags.begin(), tags.end(), t) != tags.end();
    });
  };
}

}  // namespace forgepipe
