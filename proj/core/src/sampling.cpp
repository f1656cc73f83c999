#include "forgepipe/sampling.hpp"

#include <algorithm>

#include "forgepipe/error.hpp"
#include "forgepipe/rng.hpp"

namespace forgepipe {
namespace {

__extension__ using wide = __int128;

std::int64_t floor_div(wide num, wide den) {
  wide q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return static_cast<std::int64_t>(q);
}

}  // namespace

void validate(const TimeBase& tb) {
  if (tb.fps.num <= 0 || tb.fps.den <= 0 || tb.sample_rate <= 0) {
    throw Error(Errc::InvariantError, "time base must be positive");
  }
}

std::int64_t frame_to_sample(std::int64_t frame, const TimeBase& tb) {
  validate(tb);
  return floor_div(static_cast<wide>(frame) * tb.sample_rate * tb.fps.den, tb.fps.num);
}

AudioWindow audio_window(std::int64_t start_frame, const TimeBase& tb) {
  if (start_frame < 0) throw Error(Errc::InvariantError, "start_frame must be >= 0");
  return {frame_to_sample(start_frame, tb), frame_to_sample(kClipFrames, tb)};
}

std::vector<std::int64_t> sample_train_clips(std::int64_t track_len, std::int64_t clips,
                                             std::uint64_t seed) {
  if (track_len < kClipFrames) {
    throw Error(Errc::TrackTooShort, "track of " + std::to_string(track_len) +
                                         " frames is shorter than one clip");
  }
  if (clips < 0) throw Error(Errc::InvariantError, "clip count must be >= 0");
  Rng rng(mix_key(seed, 0x545241494eULL));
  std::vector<std::int64_t> starts(static_cast<std::size_t>(clips));
  for (auto& s : starts) s = rng.uniform_int(0, track_len - kClipFrames);
  return starts;
}

std::vector<std::int64_t> place_inference_clips(std::int64_t track_len, std::int64_t n_clips) {
  if (n_clips < 1) throw Error(Errc::InvariantError, "n_clips must be >= 1");
  if (track_len < 1) throw Error(Errc::InvariantError, "track_len must be >= 1");
  if (track_len < kClipFrames) return {0};
  const std::int64_t span = track_len - kClipFrames;
  if (n_clips == 1) return {span / 2};
  // round(i * span / (n - 1)), halves rounded up. When span >= 32 (n - 1)
  // consecutive starts are at least 32 apart.
  std::vector<std::int64_t> starts(static_cast<std::size_t>(n_clips));
  const wide den = 2 * static_cast<wide>(n_clips - 1);
  for (std::int64_t i = 0; i < n_clips; ++i) {
    starts[static_cast<std::size_t>(i)] =
        floor_div(2 * static_cast<wide>(i) * span + (n_clips - 1), den);
  }
  return starts;
}

Clip cut_clip(std::span<const Image> track_frames, std::int64_t track_first_frame,
              std::optional<std::span<const float>> audio, std::int64_t start_frame,
              const TimeBase& tb) {
  const auto len = static_cast<std::int64_t>(track_frames.size());
  if (len < 1) throw Error(Errc::EmptyFrame, "track has no frames");
  if (start_frame < 0 || (len >= kClipFrames && start_frame + kClipFrames > len) ||
      (len < kClipFrames && start_frame != 0)) {
    throw Error(Errc::InvariantError, "clip start outside the track");
  }
  Clip clip;
  clip.start_frame = start_frame;
  clip.frames.reserve(kClipFrames);
  for (std::int64_t i = 0; i < kClipFrames; ++i) {
    const auto src = std::min(start_frame + i, len - 1);
    clip.frames.push_back(track_frames[static_cast<std::size_t>(src)]);
  }
  if (audio) {
    const auto window = audio_window(track_first_frame + start_frame, tb);
    std::vector<float> samples(static_cast<std::size_t>(window.length), 0.0f);
    const auto available = static_cast<std::int64_t>(audio->size());
    for (std::int64_t i = 0; i < window.length; ++i) {
      const auto s = window.start_sample + i;
      if (s >= available) break;
      samples[static_cast<std::size_t>(i)] = (*audio)[static_cast<std::size_t>(s)];
    }
    clip.audio = std::move(samples);
  }
  return clip;
}

std::vector<std::int64_t> resample_frame_indices(std::int64_t source_frames, const Rational& source,
                                                 const Rational& target) {
  if (source_frames < 0 || source.num <= 0 || source.den <= 0 || target.num <= 0 || target.den <= 0) {
    throw Error(Errc::InvariantError, "invalid resampling request");
  }
  // Output frame k sits at k / target seconds -> source frame k * source / target.
  const wide num = static_cast<wide>(source.num) * target.den;
  const wide den = static_cast<wide>(source.den) * target.num;
  std::vector<std::int64_t> out;
  for (std::int64_t k = 0;; ++k) {
    const auto idx = floor_div(static_cast<wide>(k) * num, den);
    if (idx >= source_frames) break;
    out.push_back(idx);
  }
  return out;
}

std::vector<float> resample_audio(std::span<const float> samples, std::int64_t source_rate,
                                  std::int64_t target_rate) {
  if (source_rate <= 0 || target_rate <= 0) throw Error(Errc::InvariantError, "sample rates must be positive");
  std::vector<float> out;
  const auto n = static_cast<std::int64_t>(samples.size());
  for (std::int64_t k = 0;; ++k) {
    const auto idx = floor_div(static_cast<wide>(k) * source_rate, target_rate);
    if (idx >= n) break;
    out.push_back(samples[static_cast<std::size_t>(idx)]);
  }
  return out;
}

Tensor clip_frames_tensor(const Clip& clip) {
  if (clip.frames.empty()) throw Error(Errc::EmptyFrame, "clip has no frames");
  const auto& f0 = clip.frames.front();
  Tensor t;
  t.dims = {clip.frames.size(), static_cast<std::uint64_t>(f0.height),
            static_cast<std::uint64_t>(f0.width), 3};
  t.data.reserve(clip.frames.size() * f0.size());
  for (const auto& f : clip.frames) {
    if (f.height != f0.height || f.width != f0.width) {
      throw Error(Errc::DimensionMismatch, "clip frames differ in size");
    }
    t.data.insert(t.data.end(), f.pixels.begin(), f.pixels.end());
  }
  return t;
}

std::vector<Image> frames_from_tensor(const Tensor& tensor) {
  if (tensor.dims.size() != 4 || tensor.dims[3] != 3) {
    throw Error(Errc::DimensionMismatch, "frame tensor must be [T, H, W, 3]");
  }
  const auto h = static_cast<int>(tensor.dims[1]);
  const auto w = static_cast<int>(tensor.dims[2]);
  const std::size_t per = static_cast<std::size_t>(h) * w * 3;
  std::vector<Image> frames;
  frames.reserve(tensor.dims[0]);
  for (std::uint64_t i = 0; i < tensor.dims[0]; ++i) {
    Image img;
    img.height = h;
    img.width = w;
    img.pixels.assign(tensor.data.begin() + static_cast<std::ptrdiff_t>(i * per),
                      tensor.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace forgepipe
