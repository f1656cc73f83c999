#include "forgepipe/augment.hpp"

#include <algorithm>
#include <cmath>

#include "forgepipe/error.hpp"
#include "forgepipe/geometry.hpp"

namespace forgepipe {

void validate(const AugmentConfig& cfg) {
  if (!(cfg.p_flip >= 0.0 && cfg.p_flip <= 1.0)) {
    throw Error(Errc::InvariantError, "p_flip must lie in [0, 1]");
  }
  if (!(cfg.hue_max_delta >= 0.0) || !(cfg.brightness_max_delta >= 0.0)) {
    throw Error(Errc::InvariantError, "augmentation deltas must be >= 0");
  }
  if (!(cfg.scale_lo > 0.0 && cfg.scale_lo <= cfg.scale_hi)) {
    throw Error(Errc::InvariantError, "scale range must satisfy 0 < lo <= hi");
  }
}

AugmentParams draw_augment_params(const AugmentConfig& cfg, Rng& rng) {
  validate(cfg);
  // Fixed draw order keeps parameters reproducible per seed.
  AugmentParams p;
  p.flip = rng.bernoulli(cfg.p_flip);
  p.hue_delta = rng.uniform(-cfg.hue_max_delta, cfg.hue_max_delta);
  p.brightness_delta = rng.uniform(-cfg.brightness_max_delta, cfg.brightness_max_delta);
  p.scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  return p;
}

Hsv rgb_to_hsv(double r, double g, double b) noexcept {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out{0.0, mx > 0.0 ? d / mx : 0.0, mx};
  if (d > 0.0) {
    double h;
    if (mx == r) {
      h = (g - b) / d;
    } else if (mx == g) {
      h = 2.0 + (b - r) / d;
    } else {
      h = 4.0 + (r - g) / d;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    out.h = h;
  }
  return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) noexcept {
  const double h6 = hsv.h * 6.0;
  const double sector = std::floor(h6);
  const double f = h6 - sector;
  const double p = hsv.v * (1.0 - hsv.s);
  const double q = hsv.v * (1.0 - hsv.s * f);
  const double t = hsv.v * (1.0 - hsv.s * (1.0 - f));
  switch (static_cast<int>(sector) % 6) {
    case 0: r = hsv.v; g = t; b = p; break;
    case 1: r = q; g = hsv.v; b = p; break;
    case 2: r = p; g = hsv.v; b = t; break;
    case 3: r = p; g = q; b = hsv.v; break;
    case 4: r = t; g = p; b = hsv.v; break;
    default: r = hsv.v; g = p; b = q; break;
  }
}

Image flip_horizontal(const Image& frame) {
  Image out = frame;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        out.at(y, x, c) = frame.at(y, frame.width - 1 - x, c);
      }
    }
  }
  return out;
}

Image shift_hue(const Image& frame, double delta) {
  Image out = frame;
  for (std::size_t i = 0; i + 2 < out.pixels.size(); i += 3) {
    Hsv hsv = rgb_to_hsv(out.pixels[i], out.pixels[i + 1], out.pixels[i + 2]);
    hsv.h += delta;
    hsv.h -= std::floor(hsv.h);
    double r, g, b;
    hsv_to_rgb(hsv, r, g, b);
    out.pixels[i] = static_cast<float>(r);
    out.pixels[i + 1] = static_cast<float>(g);
    out.pixels[i + 2] = static_cast<float>(b);
  }
  return out;
}

Image shift_brightness(const Image& frame, double delta) {
  Image out = frame;
  const auto d = static_cast<float>(delta);
  for (auto& v : out.pixels) v += d;
  return out;
}

Image scale_jitter(const Image& frame, double scale) {
  if (!(scale > 0.0)) throw Error(Errc::NonPositiveFactor, "scale must be positive");
  // Zoom about the frame center, output keeps the input size.
  const double cx = 0.5 * (frame.width - 1);
  const double cy = 0.5 * (frame.height - 1);
  const SimilarityTransform zoom{scale, 0.0, (1.0 - scale) * cx, (1.0 - scale) * cy};
  return warp_frame(frame, zoom, frame.width, frame.height);
}

Image clamp_unit(const Image& frame) {
  Image out = frame;
  for (auto& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

Image apply_augment(const Image& frame, const AugmentParams& params) {
  Image out = params.flip ? flip_horizontal(frame) : frame;
  if (params.hue_delta != 0.0) out = shift_hue(out, params.hue_delta);
  if (params.brightness_delta != 0.0) out = shift_brightness(out, params.brightness_delta);
  if (params.scale != 1.0) out = scale_jitter(clamp_unit(out), params.scale);
  return clamp_unit(out);
}

Clip augment_clip(const Clip& clip, const AugmentParams& params) {
  Clip out;
  out.video_id = clip.video_id;
  out.track_id = clip.track_id;
  out.clip_index = clip.clip_index;
  out.start_frame = clip.start_frame;
  out.audio = clip.audio;
  out.frames.reserve(clip.frames.size());
  for (const auto& f : clip.frames) out.frames.push_back(apply_augment(f, params));
  return out;
}

Clip augment_clip(const Clip& clip, const AugmentConfig& cfg, Rng& rng) {
  return augment_clip(clip, draw_augment_params(cfg, rng));
}

}  // namespace forgepipe
