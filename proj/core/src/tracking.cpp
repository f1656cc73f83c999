#include "forgepipe/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forgepipe/error.hpp"

namespace forgepipe {
namespace {

struct Candidate {
  int index = 0;
  BoundingBox box;  // enlarged
  LandmarkSet5 landmarks{};
  BoundingBox landmark_rect;
  float confidence = 0.0f;
};

struct CandidateFrame {
  std::int64_t frame_index = 0;
  std::vector<Candidate> faces;
};

std::vector<CandidateFrame> accepted_candidates(const DetectionMap& detections,
                                                const TrackerConfig& cfg) {
  std::vector<CandidateFrame> frames;
  for (const auto& [index, frame] : detections) {
    CandidateFrame cf{index, {}};
    for (std::size_t i = 0; i < frame.faces.size(); ++i) {
      const auto& face = frame.faces[i];
      // A face without landmarks cannot be aligned; its frame is filled by
      // interpolation like any other miss.
      if (face.confidence < cfg.confidence_threshold || !face.landmarks) continue;
      Candidate c;
      c.index = static_cast<int>(i);
      c.box = enlarge(face.bbox, cfg.enlarge_factor);
      c.landmarks = *face.landmarks;
      c.landmark_rect = landmark_bounds(c.landmarks);
      c.confidence = face.confidence;
      cf.faces.push_back(c);
    }
    if (!cf.faces.empty()) frames.push_back(std::move(cf));
  }
  return frames;
}

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  const Point2 ca = a.center(), cb = b.center();
  return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

TrackPoint make_point(std::int64_t frame_index, const Candidate& c) {
  TrackPoint p;
  p.frame_index = frame_index;
  p.bbox = c.box;
  p.landmarks = c.landmarks;
  p.smoothed_landmarks = c.landmarks;
  p.provenance = Provenance::Detected;
  p.detection_index = c.index;
  return p;
}

struct TrackState {
  std::vector<TrackPoint> points;
  BoundingBox last_box;
  BoundingBox last_landmark_rect;
  BoundingBox region;  // seeding box in multi-face mode

  void accept(std::int64_t frame_index, const Candidate& c) {
    points.push_back(make_point(frame_index, c));
    last_box = c.box;
    last_landmark_rect = c.landmark_rect;
  }
};

std::vector<TrackState> track_single(const std::vector<CandidateFrame>& frames,
                                     const TrackerConfig& cfg) {
  TrackState state;
  const auto& first = frames.front();
  const Candidate* seed = &first.faces.front();
  for (const auto& c : first.faces) {
    if (c.confidence > seed->confidence ||
        (c.confidence == seed->confidence && c.box.area() > seed->box.area())) {
      seed = &c;
    }
  }
  state.accept(first.frame_index, *seed);

  for (std::size_t f = 1; f < frames.size(); ++f) {
    const Candidate* best = nullptr;
    double best_iou = -1.0;
    for (const auto& c : frames[f].faces) {
      if (!size_consistent(c.box, state.last_box, cfg)) continue;
      const double score = iou(c.landmark_rect, state.last_landmark_rect);
      if (score > best_iou) {
        best_iou = score;
        best = &c;
      }
    }
    if (best == nullptr) continue;
    if (best_iou <= 0.0) {
      // No landmark overlap with the last detection: take the nearest face.
      double best_dist = std::numeric_limits<double>::infinity();
      for (const auto& c : frames[f].faces) {
        if (!size_consistent(c.box, state.last_box, cfg)) continue;
        const double d = center_distance(c.box, state.last_box);
        if (d < best_dist) {
          best_dist = d;
          best = &c;
        }
      }
    }
    state.accept(frames[f].frame_index, *best);
  }
  std::vector<TrackState> out;
  out.push_back(std::move(state));
  return out;
}

std::vector<TrackState> track_multi(const std::vector<CandidateFrame>& frames,
                                    const TrackerConfig& cfg) {
  // Seed from the first opening frame that shows the most faces.
  const std::size_t window =
      std::min<std::size_t>(frames.size(), static_cast<std::size_t>(cfg.multi_face_window));
  std::size_t seed_frame = 0;
  for (std::size_t f = 1; f < window; ++f) {
    if (frames[f].faces.size() > frames[seed_frame].faces.size()) seed_frame = f;
  }
  std::vector<Candidate> seeds = frames[seed_frame].faces;
  std::sort(seeds.begin(), seeds.end(), [](const Candidate& a, const Candidate& b) {
    const Point2 ca = a.box.center(), cb = b.box.center();
    if (ca.x != cb.x) return ca.x < cb.x;
    if (ca.y != cb.y) return ca.y < cb.y;
    return a.index < b.index;
  });

  std::vector<TrackState> tracks(seeds.size());
  for (std::size_t t = 0; t < seeds.size(); ++t) {
    tracks[t].last_box = seeds[t].box;
    tracks[t].last_landmark_rect = seeds[t].landmark_rect;
    tracks[t].region = seeds[t].box;
  }

  struct Pair {
    double score;
    std::size_t track;
    std::size_t cand;
  };
  for (const auto& frame : frames) {
    const auto& faces = frame.faces;
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      for (std::size_t c = 0; c < faces.size(); ++c) {
        if (!size_consistent(faces[c].box, tracks[t].last_box, cfg)) continue;
        const double score = iou(faces[c].box, tracks[t].last_box);
        if (score > 0.0) pairs.push_back({score, t, c});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.track != b.track) return a.track < b.track;
      return a.cand < b.cand;
    });
    std::vector<int> assigned(tracks.size(), -1);
    std::vector<bool> taken(faces.size(), false);
    for (const auto& p : pairs) {
      if (assigned[p.track] >= 0 || taken[p.cand]) continue;
      assigned[p.track] = static_cast<int>(p.cand);
      taken[p.cand] = true;
    }
    // Fallback for tracks with no overlapping candidate: nearest free face to
    // the track's seeded region, within one region diagonal.
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      if (assigned[t] >= 0) continue;
      const auto& region = tracks[t].region;
      const double limit = std::hypot(region.w, region.h);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < faces.size(); ++c) {
        if (taken[c] || !size_consistent(faces[c].box, tracks[t].last_box, cfg)) continue;
        if (iou(faces[c].box, tracks[t].last_box) > 0.0) continue;
        const double d = center_distance(faces[c].box, region);
        if (d <= limit && d < best) {
          best = d;
          assigned[t] = static_cast<int>(c);
        }
      }
      if (assigned[t] >= 0) taken[static_cast<std::size_t>(assigned[t])] = true;
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      if (assigned[t] >= 0) tracks[t].accept(frame.frame_index, faces[static_cast<std::size_t>(assigned[t])]);
    }
  }
  return tracks;
}

FaceTrack finalize(std::int64_t track_id, const std::vector<TrackPoint>& detected,
                   const TrackerConfig& cfg) {
  FaceTrack track;
  track.track_id = track_id;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    if (i > 0) {
      const auto& before = detected[i - 1];
      const auto& after = detected[i];
      for (std::int64_t f = before.frame_index + 1; f < after.frame_index; ++f) {
        track.points.push_back(interpolate_gap(before, after, f));
      }
    }
    track.points.push_back(detected[i]);
  }
  return smooth_track(track, cfg.smooth_window);
}

}  // namespace

void validate(const TrackerConfig& cfg) {
  if (!(cfg.confidence_threshold >= 0.0 && cfg.confidence_threshold <= 1.0)) {
    throw Error(Errc::InvariantError, "confidence_threshold must lie in [0, 1]");
  }
  if (!(cfg.enlarge_factor > 0.0)) {
    throw Error(Errc::NonPositiveFactor, "enlarge_factor must be positive");
  }
  if (!(cfg.size_ratio_lo < 1.0 && 1.0 < cfg.size_ratio_hi)) {
    throw Error(Errc::InvariantError, "size ratio gate must satisfy lo < 1 < hi");
  }
  if (cfg.smooth_window < 1 || cfg.smooth_window % 2 == 0) {
    throw Error(Errc::EvenWindow, "smooth_window must be odd and >= 1");
  }
  if (cfg.multi_face_window < 1 || cfg.multi_face_min_frames < 1) {
    throw Error(Errc::InvariantError, "multi-face trigger window must be positive");
  }
}

bool size_consistent(const BoundingBox& candidate, const BoundingBox& last,
                     const TrackerConfig& cfg) noexcept {
  const double a_last = last.area();
  if (!(a_last > 0.0)) return false;
  const double ratio = std::sqrt(candidate.area() / a_last);
  return ratio >= cfg.size_ratio_lo && ratio <= cfg.size_ratio_hi;
}

bool detect_multi_face(const DetectionMap& detections, const TrackerConfig& cfg) {
  if (cfg.multi_face) return *cfg.multi_face;
  const auto frames = accepted_candidates(detections, cfg);
  const std::size_t window =
      std::min<std::size_t>(frames.size(), static_cast<std::size_t>(cfg.multi_face_window));
  int crowded = 0;
  for (std::size_t f = 0; f < window; ++f) {
    if (frames[f].faces.size() > 1) ++crowded;
  }
  return crowded >= cfg.multi_face_min_frames;
}

std::vector<FaceTrack> build_tracks(const DetectionMap& detections, std::int64_t num_frames,
                                    const TrackerConfig& cfg) {
  validate(cfg);
  if (num_frames < 1) throw Error(Errc::InvariantError, "num_frames must be >= 1");
  if (!detections.empty() && detections.rbegin()->first >= num_frames) {
    throw Error(Errc::InvariantError, "detection frame index beyond num_frames");
  }
  const auto frames = accepted_candidates(detections, cfg);
  if (frames.empty()) {
    throw Error(Errc::NoFacesDetected, "no face passes the confidence threshold");
  }
  const bool multi = detect_multi_face(detections, cfg);
  const auto states = multi ? track_multi(frames, cfg) : track_single(frames, cfg);

  std::vector<FaceTrack> tracks;
  for (const auto& state : states) {
    if (state.points.empty()) continue;
    tracks.push_back(finalize(static_cast<std::int64_t>(tracks.size()), state.points, cfg));
  }
  return tracks;
}

TrackPoint interpolate_gap(const TrackPoint& before, const TrackPoint& after,
                           std::int64_t frame_index) {
  if (!(before.frame_index < frame_index && frame_index < after.frame_index)) {
    throw Error(Errc::BadOrdering, "interpolated frame must lie strictly between its anchors");
  }
  const double t = static_cast<double>(frame_index - before.frame_index) /
                   static_cast<double>(after.frame_index - before.frame_index);
  const auto lerp = [t](double a, double b) { return a + (b - a) * t; };
  TrackPoint p;
  p.frame_index = frame_index;
  p.bbox = {lerp(before.bbox.x, after.bbox.x), lerp(before.bbox.y, after.bbox.y),
            lerp(before.bbox.w, after.bbox.w), lerp(before.bbox.h, after.bbox.h)};
  for (std::size_t i = 0; i < 5; ++i) {
    p.landmarks[i] = {lerp(before.landmarks[i].x, after.landmarks[i].x),
                      lerp(before.landmarks[i].y, after.landmarks[i].y)};
  }
  p.smoothed_landmarks = p.landmarks;
  p.provenance = Provenance::Interpolated;
  p.detection_index = -1;
  return p;
}

FaceTrack smooth_track(const FaceTrack& track, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(Errc::EvenWindow, "smoothing window must be odd and >= 1");
  }
  FaceTrack out = track;
  const auto n = static_cast<std::ptrdiff_t>(track.points.size());
  const std::ptrdiff_t k = (window - 1) / 2;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - k);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + k);
    const auto count = static_cast<double>(hi - lo + 1);
    const auto& center = track.points[static_cast<std::size_t>(i)].landmarks;
    for (std::size_t p = 0; p < 5; ++p) {
      // Averaging offsets from the center sample keeps constant and
      // symmetric-linear neighbourhoods exact.
      double dx = 0.0, dy = 0.0;
      for (std::ptrdiff_t j = lo; j <= hi; ++j) {
        const auto& q = track.points[static_cast<std::size_t>(j)].landmarks[p];
        dx += q.x - center[p].x;
        dy += q.y - center[p].y;
      }
      out.points[static_cast<std::size_t>(i)].smoothed_landmarks[p] = {
          center[p].x + dx / count, center[p].y + dy / count};
    }
  }
  return out;
}

void validate(const FaceTrack& track) {
  if (track.points.empty()) throw Error(Errc::InvariantError, "track has no points");
  bool any_detected = false;
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    if (i > 0 && track.points[i].frame_index != track.points[i - 1].frame_index + 1) {
      throw Error(Errc::InvariantError, "track frames are not consecutive");
    }
    any_detected |= track.points[i].provenance == Provenance::Detected;
  }
  if (!any_detected) throw Error(Errc::InvariantError, "track has no detected point");
}

std::vector<SimilarityEstimate> alignment_transforms(const FaceTrack& track,
                                                     const LandmarkSet5& reference) {
  std::vector<SimilarityEstimate> out;
  out.reserve(track.points.size());
  for (const auto& p : track.points) {
    out.push_back(estimate_similarity(p.smoothed_landmarks, reference));
  }
  return out;
}

std::vector<Image> align_track(const FaceTrack& track, const FrameSource& frames,
                               const LandmarkSet5& reference, int out_size) {
  const auto transforms = alignment_transforms(track, reference);
  std::vector<Image> out;
  out.reserve(track.points.size());
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    out.push_back(warp_frame(frames(track.points[i].frame_index), transforms[i].transform,
                             out_size, out_size));
  }
  return out;
}

}  // namespace forgepipe
