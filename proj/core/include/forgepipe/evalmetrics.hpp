#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "forgepipe/dataio.hpp"

namespace forgepipe {

struct VideoVerdict {
  std::string video_id;
  double video_score = 0.0;
  int label = 0;  // 1 fake
  std::size_t num_clips_used = 0;
  std::size_t num_tracks = 0;
};

// Mean over each track's clips, then max over tracks. The label is left at 0.
VideoVerdict aggregate_video(std::span<const ScoreRecord> scores);

// Groups records by video and attaches manifest labels. Output is sorted by
// video_id. Throws UnknownVideoId for scores of videos not in the manifest.
std::vector<VideoVerdict> aggregate_videos(std::span<const ScoreRecord> scores,
                                           std::span<const VideoManifestEntry> manifest);

// Mann-Whitney AUC with ties counted half, via midranks.
double roc_auc(std::span<const VideoVerdict> verdicts);
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Fraction with (score >= threshold) == (label == 1).
double accuracy(std::span<const VideoVerdict> verdicts, double threshold = 0.5);

using ManifestPredicate = std::function<bool(const VideoManifestEntry&)>;

// Drops verdicts whose manifest entry satisfies `exclude`.
std::vector<VideoVerdict> filter_category(std::span<const VideoVerdict> verdicts,
                                          std::span<const VideoManifestEntry> manifest,
                                          const ManifestPredicate& exclude);

ManifestPredicate has_any_tag(std::vector<std::string> tags);

}  // namespace forgepipe
