#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cstring>

#include "forgepipe/augment.hpp"
#include "forgepipe/error.hpp"

namespace forgepipe {
namespace {

Image random_image(Rng& rng, int h = 24, int w = 20) {
  Image img(h, w);
  for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

Clip random_clip(Rng& rng, bool with_audio = true) {
  Clip clip;
  clip.video_id = "v";
  for (int i = 0; i < 32; ++i) clip.frames.push_back(random_image(rng));
  if (with_audio) {
    std::vector<float> audio(1000);
    for (auto& a : audio) a = static_cast<float>(rng.normal());
    clip.audio = audio;
  }
  return clip;
}

AugmentConfig identity_config() {
  AugmentConfig cfg;
  cfg.p_flip = 0.0;
  cfg.hue_max_delta = 0.0;
  cfg.brightness_max_delta = 0.0;
  cfg.scale_lo = 1.0;
  cfg.scale_hi = 1.0;
  return cfg;
}

bool bytes_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

TEST(Augment, IdentityConfigIsBitExactNoOp) {
  Rng data(1);
  const Clip clip = random_clip(data);
  Rng rng(2);
  const Clip out = augment_clip(clip, identity_config(), rng);
  ASSERT_EQ(out.frames.size(), 32u);
  for (std::size_t i = 0; i < 32; ++i) ASSERT_TRUE(bytes_equal(out.frames[i].pixels, clip.frames[i].pixels));
  EXPECT_TRUE(bytes_equal(*out.audio, *clip.audio));
}

TEST(Augment, DoubleFlipIsInvolution) {
  Rng data(3);
  const Clip clip = random_clip(data);
  AugmentParams p;
  p.flip = true;
  const Clip twice = augment_clip(augment_clip(clip, p), p);
  for (std::size_t i = 0; i < 32; ++i) ASSERT_TRUE(bytes_equal(twice.frames[i].pixels, clip.frames[i].pixels));
  const Image once = flip_horizontal(clip.frames[0]);
  EXPECT_EQ(once.at(3, 0, 1), clip.frames[0].at(3, clip.frames[0].width - 1, 1));
}

TEST(Augment, BrightnessClampsToOne) {
  const Image img(8, 8, 0.9f);
  AugmentParams p;
  p.brightness_delta = 0.5;
  for (float v : apply_augment(img, p).pixels) EXPECT_EQ(v, 1.0f);
  p.brightness_delta = -1.5;
  for (float v : apply_augment(img, p).pixels) EXPECT_EQ(v, 0.0f);
}

TEST(Augment, PropertyOutputsClampedAndAudioUntouched) {
  Rng rng(4);
  AugmentConfig cfg;
  cfg.brightness_max_delta = 0.6;
  cfg.scale_hi = 1.6;
  for (int trial = 0; trial < 20; ++trial) {
    const Clip clip = random_clip(rng);
    const Clip out = augment_clip(clip, cfg, rng);
    for (const auto& f : out.frames) {
      ASSERT_EQ(f.height, clip.frames[0].height);
      ASSERT_EQ(f.width, clip.frames[0].width);
      for (float v : f.pixels) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
    ASSERT_TRUE(bytes_equal(*out.audio, *clip.audio));
  }
}

TEST(Augment, SameParametersForEveryFrame) {
  Rng rng(5);
  const Image probe = random_image(rng);
  Clip clip;
  for (int i = 0; i < 32; ++i) clip.frames.push_back(probe);
  AugmentConfig cfg;
  cfg.brightness_max_delta = 0.3;
  cfg.scale_hi = 1.5;
  for (int trial = 0; trial < 10; ++trial) {
    const Clip out = augment_clip(clip, cfg, rng);
    for (std::size_t i = 1; i < 32; ++i) ASSERT_TRUE(bytes_equal(out.frames[i].pixels, out.frames[0].pixels));
  }
}

TEST(Augment, DeterministicUnderSeed) {
  Rng data(6);
  const Clip clip = random_clip(data, false);
  Rng a(77);
  Rng b(77);
  const Clip x = augment_clip(clip, AugmentConfig{}, a);
  const Clip y = augment_clip(clip, AugmentConfig{}, b);
  for (std::size_t i = 0; i < 32; ++i) ASSERT_TRUE(bytes_equal(x.frames[i].pixels, y.frames[i].pixels));
  EXPECT_FALSE(x.audio.has_value());
}

TEST(Augment, DrawnParametersWithinRanges) {
  Rng rng(8);
  const AugmentConfig cfg;
  constexpr int kBins = 20;
  constexpr int kDraws = 20000;
  std::vector<double> hue_bins(kBins, 0.0);
  int flips = 0;
  for (int i = 0; i < kDraws; ++i) {
    const auto p = draw_augment_params(cfg, rng);
    ASSERT_LE(std::abs(p.hue_delta), cfg.hue_max_delta);
    ASSERT_LE(std::abs(p.brightness_delta), cfg.brightness_max_delta);
    ASSERT_GE(p.scale, cfg.scale_lo);
    ASSERT_LE(p.scale, cfg.scale_hi);
    flips += p.flip ? 1 : 0;
    const auto bin = static_cast<int>((p.hue_delta + cfg.hue_max_delta) / (2 * cfg.hue_max_delta) * kBins);
    hue_bins[static_cast<std::size_t>(std::min(bin, kBins - 1))] += 1;
  }
  EXPECT_NEAR(flips / static_cast<double>(kDraws), 0.5, 0.02);
  const double expected = static_cast<double>(kDraws) / kBins;
  double stat = 0.0;
  for (double c : hue_bins) stat += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(kBins - 1);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, stat)), 0.01);
}

TEST(Hue, RedShiftedOneThirdIsGreen) {
  Image img(1, 1);
  img.at(0, 0, 0) = 1.0f;
  const Image out = shift_hue(img, 1.0 / 3.0);
  EXPECT_NEAR(out.at(0, 0, 0), 0.0f, 1e-6);
  EXPECT_NEAR(out.at(0, 0, 1), 1.0f, 1e-6);
  EXPECT_NEAR(out.at(0, 0, 2), 0.0f, 1e-6);
  const Image wrapped = shift_hue(img, -2.0 / 3.0);
  EXPECT_NEAR(wrapped.at(0, 0, 1), 1.0f, 1e-6);
}

TEST(Hue, GrayIsInvariant) {
  const Image img(3, 3, 0.4f);
  for (float v : shift_hue(img, 0.17).pixels) EXPECT_NEAR(v, 0.4f, 1e-7);
}

TEST(Hue, HsvRoundTrip) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    double r2 = 0, g2 = 0, b2 = 0;
    hsv_to_rgb(rgb_to_hsv(r, g, b), r2, g2, b2);
    ASSERT_NEAR(r, r2, 1e-12);
    ASSERT_NEAR(g, g2, 1e-12);
    ASSERT_NEAR(b, b2, 1e-12);
  }
}

TEST(ScaleJitter, UnitScaleIsIdentityAndConstantsStayConstant) {
  Rng rng(10);
  const Image img = random_image(rng);
  EXPECT_EQ(scale_jitter(img, 1.0), img);
  for (float v : scale_jitter(Image(10, 10, 0.3f), 1.7).pixels) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(ScaleJitter, CenterPixelStaysFixed) {
  Image img(11, 11);
  img.at(5, 5, 0) = 1.0f;
  const Image out = scale_jitter(img, 1.2);
  EXPECT_NEAR(out.at(5, 5, 0), 1.0f, 1e-6);
  EXPECT_LT(out.at(0, 0, 0), 1e-6);
}

TEST(AugmentConfig, ValidationRejectsBadRanges) {
  AugmentConfig cfg;
  cfg.p_flip = 1.5;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.scale_lo = 1.3;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.brightness_max_delta = -0.1;
  EXPECT_THROW(validate(cfg), Error);
}

}  // namespace
}  // namespace forgepipe
