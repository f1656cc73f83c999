#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forgepipe/geometry.hpp"

namespace forgepipe {

// Frame rate kept as an exact fraction, serialized as "num/den".
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  static Rational parse(std::string_view text);
  std::string to_string() const;
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational&, const Rational&) = default;
};

enum class Label { Real, Fake };

enum class ManipulationKind { None, Deepfake, FaceSwap, Face2Face, NeuralTextures, Other };

struct Manipulation {
  ManipulationKind kind = ManipulationKind::None;
  // Original spelling when kind == Other.
  std::string other;

  static Manipulation parse(std::string_view name);
  std::string name() const;

  friend bool operator==(const Manipulation&, const Manipulation&) = default;
};

std::string_view label_name(Label label) noexcept;
Label parse_label(std::string_view name);

struct VideoManifestEntry {
  std::string video_id;
  Label label = Label::Real;
  Manipulation manipulation;
  std::filesystem::path frames_uri;
  std::optional<std::filesystem::path> audio_uri;
  Rational fps{29, 1};
  std::int64_t sample_rate = 44100;
  std::int64_t num_frames = 1;
  // Free-form category tags used by subset evaluation (e.g. "dog_mask").
  std::vector<std::string> tags;

  friend bool operator==(const VideoManifestEntry&, const VideoManifestEntry&) = default;
};

// Throws InvariantError on the first violated field invariant.
void validate(const VideoManifestEntry& entry);

VideoManifestEntry parse_manifest_line(std::string_view line, std::size_t line_no);
std::string format_manifest_line(const VideoManifestEntry& entry);
std::vector<VideoManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const VideoManifestEntry> entries);

// ---------------------------------------------------------------------------
// FOTENSR1 binary tensors.
//
//   offset 0   8 bytes  magic "FOTENSR1"
//   offset 8   u32      dtype (0 = f32)
//   offset 12  u32      ndim
//   offset 16  u64 x ndim dims
//   then       f32 x prod(dims) payload, row-major
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTensorMagic = "FOTENSR1";

enum class DType : std::uint32_t { F32 = 0 };

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint64_t> d, std::vector<float> values)
      : dims(std::move(d)), data(std::move(values)) {}

  std::uint64_t element_count() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::string encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::string_view bytes);
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                  std::span<const float> values);
Tensor read_tensor(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Detection streams (JSONL, one line per frame with detections).
// ---------------------------------------------------------------------------

struct FaceDetection {
  BoundingBox bbox;
  float confidence = 0.0f;
  std::optional<LandmarkSet5> landmarks;

  friend bool operator==(const FaceDetection&, const FaceDetection&) = default;
};

struct FrameDetections {
  std::int64_t frame_index = 0;
  std::vector<FaceDetection> faces;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

using DetectionMap = std::map<std::int64_t, FrameDetections>;

FrameDetections parse_detection_line(std::string_view line, std::size_t line_no);
std::string format_detection_line(const FrameDetections& frame);
DetectionMap parse_detections(std::string_view text);
DetectionMap read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, const DetectionMap& detections);

// ---------------------------------------------------------------------------
// Score tables: CSV "video_id,track_id,clip_index,score", 6-decimal scores.
// ---------------------------------------------------------------------------

struct ScoreRecord {
  std::string video_id;
  std::int64_t track_id = 0;
  std::int64_t clip_index = 0;
  float score = 0.0f;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

inline constexpr std::string_view kScoreCsvHeader = "video_id,track_id,clip_index,score";

std::string format_scores_csv(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> parse_scores_csv(std::string_view text);
void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRecord> records);
std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Embedding sets: a directory holding visual.ft [N, d_v], optional audio.ft
// [N, d_a] and index.jsonl with one {video_id, track_id, clip_index, label,
// row} line per row.
// ---------------------------------------------------------------------------

struct ClipKey {
  std::string video_id;
  std::int64_t track_id = 0;
  std::int64_t clip_index = 0;

  friend bool operator==(const ClipKey&, const ClipKey&) = default;
  friend auto operator<=>(const ClipKey&, const ClipKey&) = default;
};

inline constexpr int kUnknownLabel = -1;

struct EmbeddingSet {
  std::vector<ClipKey> keys;
  // 0 real, 1 fake, kUnknownLabel when not known.
  std::vector<int> labels;
  Tensor visual;
  std::optional<Tensor> audio;

  std::size_t size() const noexcept { return keys.size(); }
  std::size_t dim_v() const { return visual.dims.size() == 2 ? visual.dims[1] : 0; }
  std::size_t dim_a() const { return audio && audio->dims.size() == 2 ? audio->dims[1] : 0; }
  std::span<const float> visual_row(std::size_t i) const {
    return std::span<const float>(visual.data).subspan(i * dim_v(), dim_v());
  }
  std::span<const float> audio_row(std::size_t i) const {
    return std::span<const float>(audio->data).subspan(i * dim_a(), dim_a());
  }
};

void validate(const EmbeddingSet& set);
void write_embedding_set(const std::filesystem::path& dir, const EmbeddingSet& set);
EmbeddingSet read_embedding_set(const std::filesystem::path& dir);

// Whole-file helpers. write_file_atomic goes through a sibling temp file and
// a rename so readers never observe partial output.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Splits on '\n', dropping a trailing '\r'. Blank lines are returned as empty
// views so callers can keep line numbers.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace forgepipe
