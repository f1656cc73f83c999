#pragma once

#include <cstdint>
#include <span>

#include "forgepipe/image.hpp"
#include "forgepipe/rng.hpp"
#include "forgepipe/sampling.hpp"

namespace forgepipe {

struct AugmentConfig {
  double p_flip = 0.5;
  double hue_max_delta = 1.0 / 5.0;
  double brightness_max_delta = 32.0 / 255.0;
  double scale_lo = 1.0;
  double scale_hi = 1.25;
  std::uint64_t seed = 0;
};

void validate(const AugmentConfig& cfg);

// One draw per clip; every frame of the clip receives the same parameters.
struct AugmentParams {
  bool flip = false;
  double hue_delta = 0.0;         // in normalized hue units, [0, 1) wraps
  double brightness_delta = 0.0;  // additive, RGB units
  double scale = 1.0;             // zoom factor, center crop back to size
};

AugmentParams draw_augment_params(const AugmentConfig& cfg, Rng& rng);

// Flip, hue, brightness, scale jitter, then clamp to [0, 1]. Parameters at
// their neutral values skip the corresponding stage entirely.
Image apply_augment(const Image& frame, const AugmentParams& params);

// Audio is passed through untouched.
Clip augment_clip(const Clip& clip, const AugmentConfig& cfg, Rng& rng);
Clip augment_clip(const Clip& clip, const AugmentParams& params);

// Individual stages.
Image flip_horizontal(const Image& frame);
Image shift_hue(const Image& frame, double delta);
Image shift_brightness(const Image& frame, double delta);
Image scale_jitter(const Image& frame, double scale);
Image clamp_unit(const Image& frame);

struct Hsv {
  double h, s, v;
};
Hsv rgb_to_hsv(double r, double g, double b) noexcept;
void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) noexcept;

}  // namespace forgepipe
