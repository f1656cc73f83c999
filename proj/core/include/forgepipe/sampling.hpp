#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forgepipe/dataio.hpp"
#include "forgepipe/image.hpp"

namespace forgepipe {

inline constexpr std::int64_t kClipFrames = 32;
inline constexpr std::int64_t kMaxInferenceClips = 9;

struct TimeBase {
  Rational fps{29, 1};
  std::int64_t sample_rate = 44100;

  friend bool operator==(const TimeBase&, const TimeBase&) = default;
};

void validate(const TimeBase& tb);

// floor(frame * sample_rate * den / num), exact integer arithmetic.
std::int64_t frame_to_sample(std::int64_t frame, const TimeBase& tb);

struct AudioWindow {
  std::int64_t start_sample = 0;
  std::int64_t length = 0;

  friend bool operator==(const AudioWindow&, const AudioWindow&) = default;
};

// Window length is the same for every clip: floor(32 * sample_rate * den / num).
AudioWindow audio_window(std::int64_t start_frame, const TimeBase& tb);

// Independent uniform draws from [0, track_len - 32].
std::vector<std::int64_t> sample_train_clips(std::int64_t track_len, std::int64_t clips,
                                             std::uint64_t seed);

// Uniformly spaced starts. Tracks shorter than one clip get a single start at
// 0 (cut_clip pads by repeating the last frame).
std::vector<std::int64_t> place_inference_clips(std::int64_t track_len, std::int64_t n_clips);

struct Clip {
  std::string video_id;
  std::int64_t track_id = 0;
  std::int64_t clip_index = 0;
  std::int64_t start_frame = 0;  // relative to the track
  std::vector<Image> frames;     // exactly kClipFrames
  std::optional<std::vector<float>> audio;
};

// `track_first_frame` is the video frame of track frame 0; the audio window is
// taken at that absolute position. Missing audio samples are zero-filled.
Clip cut_clip(std::span<const Image> track_frames, std::int64_t track_first_frame,
              std::optional<std::span<const float>> audio, std::int64_t start_frame,
              const TimeBase& tb);

// Source frame index for each output frame when converting a stream from
// `source` fps to `target` fps (nearest earlier-or-equal timestamp).
std::vector<std::int64_t> resample_frame_indices(std::int64_t source_frames, const Rational& source,
                                                 const Rational& target);

// Nearest-sample rate conversion.
std::vector<float> resample_audio(std::span<const float> samples, std::int64_t source_rate,
                                  std::int64_t target_rate);

// [32, H, W, 3]
Tensor clip_frames_tensor(const Clip& clip);
std::vector<Image> frames_from_tensor(const Tensor& tensor);

}  // namespace forgepipe
