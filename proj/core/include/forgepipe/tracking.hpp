#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "forgepipe/dataio.hpp"
#include "forgepipe/geometry.hpp"
#include "forgepipe/image.hpp"

namespace forgepipe {

enum class Provenance { Detected, Interpolated };

struct TrackPoint {
  std::int64_t frame_index = 0;
  // Enlarged detection box (or its interpolation).
  BoundingBox bbox;
  LandmarkSet5 landmarks{};
  Provenance provenance = Provenance::Detected;
  // Filled by smooth_track.
  LandmarkSet5 smoothed_landmarks{};
  // Position of the source face in its FrameDetections line, -1 if interpolated.
  int detection_index = -1;
};

struct FaceTrack {
  std::int64_t track_id = 0;
  std::vector<TrackPoint> points;

  std::int64_t first_frame() const { return points.front().frame_index; }
  std::int64_t last_frame() const { return points.back().frame_index; }
  std::size_t size() const noexcept { return points.size(); }
};

struct TrackerConfig {
  double confidence_threshold = 0.95;
  double enlarge_factor = 1.8;
  // sqrt(area_candidate / area_last) must fall inside [lo, hi].
  double size_ratio_lo = 0.5;
  double size_ratio_hi = 2.0;
  int smooth_window = 5;
  // nullopt: detect from the opening frames.
  std::optional<bool> multi_face;
  // Multi-face mode is entered when >1 face passes the threshold in at least
  // `multi_face_min_frames` of the first `multi_face_window` detected frames.
  int multi_face_window = 5;
  int multi_face_min_frames = 3;
};

void validate(const TrackerConfig& cfg);

// True when the candidate passes the size-consistency gate against `last`.
bool size_consistent(const BoundingBox& candidate, const BoundingBox& last,
                     const TrackerConfig& cfg) noexcept;

// Resolves multi_face when unset.
bool detect_multi_face(const DetectionMap& detections, const TrackerConfig& cfg);

// Per-frame association, gap interpolation and landmark smoothing. Tracks span
// first-to-last accepted detection; nothing is extrapolated.
std::vector<FaceTrack> build_tracks(const DetectionMap& detections, std::int64_t num_frames,
                                    const TrackerConfig& cfg = {});

TrackPoint interpolate_gap(const TrackPoint& before, const TrackPoint& after,
                           std::int64_t frame_index);

// Centered mean over [i-k, i+k] clipped to the track span, k = (window-1)/2.
FaceTrack smooth_track(const FaceTrack& track, int window);

// Throws InvariantError unless frames are consecutive and at least one point
// was detected.
void validate(const FaceTrack& track);

using FrameSource = std::function<Image(std::int64_t frame_index)>;

// Per point: similarity from smoothed landmarks onto the reference.
std::vector<SimilarityEstimate> alignment_transforms(const FaceTrack& track,
                                                     const LandmarkSet5& reference);

std::vector<Image> align_track(const FaceTrack& track, const FrameSource& frames,
                               const LandmarkSet5& reference, int out_size = kAlignedSize);

}  // namespace forgepipe
