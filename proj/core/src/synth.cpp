#include "forgepipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "forgepipe/error.hpp"
#include "forgepipe/rng.hpp"
#include "json.hpp"

namespace forgepipe {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kDirectionStream = 0x444952ULL;
constexpr std::uint64_t kLabelStream = 0x4c4142ULL;

void draw_patch(Image& img, const BoundingBox& box, const std::array<float, 3>& color) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(box.y)));
  const int x1 = std::min(img.width, static_cast<int>(std::floor(box.x + box.w)));
  const int y1 = std::min(img.height, static_cast<int>(std::floor(box.y + box.h)));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
    }
  }
}

void draw_dot(Image& img, const Point2& p, float value) {
  const int cx = static_cast<int>(std::lround(p.x));
  const int cy = static_cast<int>(std::lround(p.y));
  for (int y = cy - 1; y <= cy + 1; ++y) {
    for (int x = cx - 1; x <= cx + 1; ++x) {
      if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = value;
    }
  }
}

void check_face(const SyntheticFace& f, std::int64_t num_frames) {
  const auto last = f.box_at(num_frames - 1);
  if (!std::isfinite(last.x) || !std::isfinite(last.y) || !(f.start.w > 0.0) ||
      !(f.start.h > 0.0)) {
    throw Error(Errc::InvariantError, "synthetic face trajectory must be finite with positive size");
  }
  if (!f.dropout_frames.empty() &&
      (*f.dropout_frames.begin() < 0 || *f.dropout_frames.rbegin() >= num_frames)) {
    throw Error(Errc::InvariantError, "dropout frame outside [0, num_frames)");
  }
  if (!(f.confidence >= 0.0f && f.confidence <= 1.0f)) {
    throw Error(Errc::InvariantError, "synthetic confidence must lie in [0, 1]");
  }
}

}  // namespace

BoundingBox SyntheticFace::box_at(std::int64_t frame) const noexcept {
  const auto f = static_cast<double>(frame);
  return {start.x + f * velocity.x, start.y + f * velocity.y, start.w, start.h};
}

LandmarkSet5 SyntheticFace::landmarks_at(std::int64_t frame) const noexcept {
  const auto box = box_at(frame);
  LandmarkSet5 out;
  for (std::size_t i = 0; i < 5; ++i) {
    out[i] = {box.x + base_landmarks[i].x * box.w, box.y + base_landmarks[i].y * box.h};
  }
  return out;
}

void validate(const SceneSpec& spec) {
  if (spec.num_frames < 1) throw Error(Errc::InvariantError, "scene needs at least one frame");
  if (spec.width < 1 || spec.height < 1) throw Error(Errc::InvariantError, "scene size must be positive");
  for (const auto& f : spec.persons) check_face(f, spec.num_frames);
  for (const auto& f : spec.distractors) check_face(f, spec.num_frames);
}

Scene generate_scene(const SceneSpec& spec) {
  validate(spec);
  Scene scene;
  for (std::size_t p = 0; p < spec.persons.size(); ++p) {
    PersonTruth t;
    t.person = static_cast<int>(p);
    t.first_frame = -1;
    scene.truth.persons.push_back(t);
  }

  for (std::int64_t f = 0; f < spec.num_frames; ++f) {
    std::vector<std::pair<int, FaceDetection>> faces;
    const auto add = [&](const SyntheticFace& face, int entity) {
      if (face.dropout_frames.count(f) != 0) return;
      faces.push_back({entity, FaceDetection{face.box_at(f), face.confidence, face.landmarks_at(f)}});
    };
    for (std::size_t p = 0; p < spec.persons.size(); ++p) add(spec.persons[p], static_cast<int>(p));
    for (std::size_t d = 0; d < spec.distractors.size(); ++d) {
      add(spec.distractors[d], -static_cast<int>(d) - 1);
    }
    if (faces.empty()) continue;

    auto rng = Rng::keyed(spec.seed, kShuffleStream, static_cast<std::uint64_t>(f));
    for (std::size_t i = faces.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(faces[i - 1], faces[j]);
    }

    FrameDetections frame{f, {}};
    std::vector<int> entities;
    for (auto& [entity, det] : faces) {
      entities.push_back(entity);
      frame.faces.push_back(det);
      if (entity >= 0) {
        auto& t = scene.truth.persons[static_cast<std::size_t>(entity)];
        if (t.first_frame < 0) t.first_frame = f;
        t.last_frame = f;
        ++t.detected_frames;
      }
    }
    scene.detections.emplace(f, std::move(frame));
    scene.truth.assignment.emplace(f, std::move(entities));
  }
  return scene;
}

Image render_frame(const SceneSpec& spec, std::int64_t frame_index) {
  Image img(spec.height, spec.width, 0.0f);
  // Dim diagonal gradient so the background is not flat.
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float g = 0.05f + 0.1f * static_cast<float>(x + y) / static_cast<float>(img.width + img.height);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = g;
    }
  }
  const auto draw = [&](const SyntheticFace& face) {
    draw_patch(img, face.box_at(frame_index), face.color);
    for (const auto& p : face.landmarks_at(frame_index)) draw_dot(img, p, 1.0f);
  };
  for (const auto& d : spec.distractors) draw(d);
  for (const auto& p : spec.persons) draw(p);
  return img;
}

Tensor render_frames(const SceneSpec& spec) {
  validate(spec);
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(spec.num_frames), static_cast<std::uint64_t>(spec.height),
            static_cast<std::uint64_t>(spec.width), 3};
  t.data.reserve(static_cast<std::size_t>(t.element_count()));
  for (std::int64_t f = 0; f < spec.num_frames; ++f) {
    const Image img = render_frame(spec, f);
    t.data.insert(t.data.end(), img.pixels.begin(), img.pixels.end());
  }
  return t;
}

std::string format_truth_json(const SceneTruth& truth) {
  nlohmann::json persons = nlohmann::json::array();
  for (const auto& p : truth.persons) {
    persons.push_back({{"person", p.person},
                       {"first_frame", p.first_frame},
                       {"last_frame", p.last_frame},
                       {"detected_frames", p.detected_frames}});
  }
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& [f, entities] : truth.assignment) {
    frames.push_back({{"frame_index", f}, {"entities", entities}});
  }
  return nlohmann::json{{"persons", persons}, {"frames", frames}}.dump(1);
}

SceneSpec random_scene_spec(const RandomSceneOptions& o, std::uint64_t seed) {
  if (o.persons < 0 || o.distractors < 0 || !(o.dropout >= 0.0 && o.dropout < 1.0)) {
    throw Error(Errc::InvariantError, "invalid random scene options");
  }
  SceneSpec spec;
  spec.num_frames = o.num_frames;
  spec.width = o.width;
  spec.height = o.height;
  spec.seed = seed;
  auto rng = Rng::keyed(seed, 0x5343454e45ULL);

  const double lane = static_cast<double>(o.width) / std::max(1, o.persons);
  const double frames = static_cast<double>(std::max<std::int64_t>(1, o.num_frames - 1));
  std::vector<double> sizes;
  for (int p = 0; p < o.persons; ++p) {
    SyntheticFace face;
    const double size = rng.uniform(0.09, 0.13) * std::min(lane, static_cast<double>(o.height));
    sizes.push_back(size);
    const double cx = (p + 0.5) * lane + rng.uniform(-0.05, 0.05) * lane;
    const double cy = o.height * rng.uniform(0.4, 0.6);
    face.start = {cx - size / 2, cy - size / 2, size, size * 1.15};
    // Total drift stays under a tenth of the lane.
    face.velocity = {rng.uniform(-0.1, 0.1) * lane / frames, rng.uniform(-0.1, 0.1) * o.height / frames};
    face.confidence = static_cast<float>(rng.uniform(0.96, 1.0));
    face.color = {static_cast<float>(rng.uniform(0.4, 0.9)), static_cast<float>(rng.uniform(0.3, 0.8)),
                  static_cast<float>(rng.uniform(0.2, 0.7))};
    for (std::int64_t f = o.clean_prefix; f < o.num_frames; ++f) {
      if (rng.bernoulli(o.dropout)) face.dropout_frames.insert(f);
    }
    spec.persons.push_back(face);
  }

  const double ref_size = sizes.empty() ? 0.12 * o.height : sizes.front();
  for (int d = 0; d < o.distractors; ++d) {
    SyntheticFace face;
    const bool confident = d % 2 == 1;
    // Confident distractors differ in linear size by >3x, far outside the gate.
    const double size = confident ? ref_size * (rng.bernoulli(0.5) ? 3.5 : 0.25) : ref_size * rng.uniform(0.8, 1.2);
    const double sx = rng.uniform(0.0, o.width - size);
    const double sy = rng.uniform(0.0, std::max(1.0, o.height - size));
    const double ex = rng.uniform(0.0, o.width - size);
    face.start = {sx, sy, size, size};
    face.velocity = {(ex - sx) / frames, 0.0};
    face.confidence = confident ? 0.99f : static_cast<float>(rng.uniform(0.5, 0.9));
    face.color = {0.3f, 0.9f, 0.3f};
    if (confident) {
      for (std::int64_t f = 0; f < std::min(o.clean_prefix, o.num_frames); ++f) face.dropout_frames.insert(f);
    }
    for (std::int64_t f = o.clean_prefix; f < o.num_frames; ++f) {
      if (rng.bernoulli(o.dropout)) face.dropout_frames.insert(f);
    }
    spec.distractors.push_back(face);
  }
  return spec;
}

// ---------------------------------------------------------------------------

void validate(const EmbeddingDatasetSpec& spec) {
  if (spec.num_videos < 1 || spec.clips_per_video < 1) {
    throw Error(Errc::InvariantError, "embedding dataset needs videos and clips");
  }
  if (spec.dim_v < 1 || spec.dim_a < 0) throw Error(Errc::InvariantError, "embedding dims must be positive");
  if (!(spec.fake_fraction >= 0.0 && spec.fake_fraction <= 1.0)) {
    throw Error(Errc::InvariantError, "fake_fraction must lie in [0, 1]");
  }
  if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
    throw Error(Errc::InvariantError, "separation must be finite and >= 0");
  }
}

std::vector<double> class_direction(const EmbeddingDatasetSpec& spec) {
  const auto dim = static_cast<std::size_t>(spec.dim_v + spec.dim_a);
  auto rng = Rng::keyed(spec.seed, kDirectionStream);
  std::vector<double> u(dim);
  double norm = 0.0;
  for (auto& x : u) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : u) x /= norm;
  return u;
}

EmbeddingSet embed_clips(const std::vector<ClipKey>& keys, const std::vector<int>& labels,
                         const EmbeddingDatasetSpec& spec) {
  validate(spec);
  if (keys.size() != labels.size()) throw Error(Errc::DimensionMismatch, "one label per clip key");
  const auto dv = static_cast<std::size_t>(spec.dim_v);
  const auto da = static_cast<std::size_t>(spec.dim_a);
  const auto u = class_direction(spec);
  const auto n = keys.size();

  EmbeddingSet set;
  set.keys = keys;
  set.labels = labels;
  set.visual.dims = {n, dv};
  set.visual.data.resize(n * dv);
  if (da > 0) {
    set.audio = Tensor{{n, da}, std::vector<float>(n * da)};
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(Errc::InvariantError, "clip label must be 0 or 1");
    const double shift = labels[i] == 1 ? spec.separation : 0.0;
    auto rng = Rng::keyed(spec.seed, stable_hash(keys[i].video_id),
                          static_cast<std::uint64_t>(keys[i].track_id),
                          static_cast<std::uint64_t>(keys[i].clip_index));
    for (std::size_t j = 0; j < dv + da; ++j) {
      const auto value = static_cast<float>(shift * u[j] + rng.normal());
      if (j < dv) {
        set.visual.data[i * dv + j] = value;
      } else {
        set.audio->data[i * da + (j - dv)] = value;
      }
    }
  }
  return set;
}

SyntheticEmbeddings generate_embeddings(const EmbeddingDatasetSpec& spec) {
  validate(spec);
  const auto n_videos = static_cast<std::size_t>(spec.num_videos);
  const auto n_fake = static_cast<std::size_t>(std::llround(spec.fake_fraction * spec.num_videos));

  std::vector<int> video_label(n_videos, 0);
  std::fill(video_label.begin(), video_label.begin() + static_cast<std::ptrdiff_t>(n_fake), 1);
  auto rng = Rng::keyed(spec.seed, kLabelStream);
  for (std::size_t i = n_videos; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(video_label[i - 1], video_label[j]);
  }

  static constexpr ManipulationKind kFakeKinds[] = {ManipulationKind::Deepfake, ManipulationKind::FaceSwap,
                                                    ManipulationKind::Face2Face,
                                                    ManipulationKind::NeuralTextures};
  SyntheticEmbeddings out;
  std::vector<ClipKey> keys;
  std::vector<int> labels;
  std::size_t fake_seen = 0;
  for (std::size_t v = 0; v < n_videos; ++v) {
    char id[32];
    std::snprintf(id, sizeof(id), "vid%05zu", v);
    VideoManifestEntry e;
    e.video_id = id;
    e.label = video_label[v] == 1 ? Label::Fake : Label::Real;
    if (e.label == Label::Fake) e.manipulation = {kFakeKinds[fake_seen++ % 4], {}};
    e.frames_uri = std::string(id) + ".ft";
    e.num_frames = 32 * spec.clips_per_video;
    out.manifest.push_back(e);
    for (std::int64_t c = 0; c < spec.clips_per_video; ++c) {
      keys.push_back({id, 0, c});
      labels.push_back(video_label[v]);
    }
  }
  out.set = embed_clips(keys, labels, spec);
  out.direction = class_direction(spec);
  return out;
}

}  // namespace forgepipe
