#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "forgepipe/dataio.hpp"
#include "forgepipe/geometry.hpp"
#include "forgepipe/image.hpp"

namespace forgepipe {

// A face-like entity moving on an affine path: box(f) = start + f * velocity.
struct SyntheticFace {
  BoundingBox start;
  Point2 velocity;
  // Landmarks in box-relative unit coordinates.
  LandmarkSet5 base_landmarks{{{0.30, 0.38}, {0.42, 0.38}, {0.50, 0.55}, {0.58, 0.38}, {0.70, 0.38}}};
  std::set<std::int64_t> dropout_frames;
  float confidence = 0.99f;
  std::array<float, 3> color{0.8f, 0.6f, 0.5f};

  BoundingBox box_at(std::int64_t frame) const noexcept;
  LandmarkSet5 landmarks_at(std::int64_t frame) const noexcept;
};

struct SceneSpec {
  std::int64_t num_frames = 50;
  int width = 320;
  int height = 240;
  std::vector<SyntheticFace> persons;
  std::vector<SyntheticFace> distractors;
  std::uint64_t seed = 0;
};

void validate(const SceneSpec& spec);

struct PersonTruth {
  int person = 0;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  std::int64_t detected_frames = 0;
};

struct SceneTruth {
  std::vector<PersonTruth> persons;
  // For each frame with detections: entity per detection slot. Persons are
  // numbered from 0; distractor d is stored as -(d + 1).
  std::map<std::int64_t, std::vector<int>> assignment;
};

struct Scene {
  DetectionMap detections;
  SceneTruth truth;
};

// Detection order within a frame is shuffled per (seed, frame).
Scene generate_scene(const SceneSpec& spec);
Image render_frame(const SceneSpec& spec, std::int64_t frame_index);
// [num_frames, height, width, 3]
Tensor render_frames(const SceneSpec& spec);

std::string format_truth_json(const SceneTruth& truth);

struct RandomSceneOptions {
  int persons = 1;
  int distractors = 0;
  double dropout = 0.0;  // per-frame miss probability after the opening frames
  std::int64_t num_frames = 60;
  int width = 640;
  int height = 360;
  // Frames at the start where every person is detected and no gated
  // distractor appears.
  std::int64_t clean_prefix = 10;
};

// Persons occupy separate vertical lanes and drift slowly. Distractors
// alternate between low-confidence look-alikes and confident faces of a very
// different size that enter after the clean prefix.
SceneSpec random_scene_spec(const RandomSceneOptions& options, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct EmbeddingDatasetSpec {
  std::int64_t num_videos = 100;
  std::int64_t clips_per_video = 16;
  int dim_v = 64;
  int dim_a = 64;  // 0: video-only
  // Distance between class means in units of the per-coordinate noise sigma.
  double separation = 10.0;
  double fake_fraction = 0.5;
  std::uint64_t seed = 0;
};

void validate(const EmbeddingDatasetSpec& spec);

struct SyntheticEmbeddings {
  EmbeddingSet set;
  std::vector<VideoManifestEntry> manifest;
  // Unit vector over [visual | audio] along which the class means differ.
  std::vector<double> direction;
};

SyntheticEmbeddings generate_embeddings(const EmbeddingDatasetSpec& spec);

// Same class-conditional Gaussians for an externally given clip list.
// `labels[i]` is 1 for fake.
EmbeddingSet embed_clips(const std::vector<ClipKey>& keys, const std::vector<int>& labels,
                         const EmbeddingDatasetSpec& spec);

std::vector<double> class_direction(const EmbeddingDatasetSpec& spec);

}  // namespace forgepipe
