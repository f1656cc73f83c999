#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace forgepipe {

// Interleaved RGB frame, row-major HWC, values nominally in [0, 1].
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * kChannels, fill) {}

  bool empty() const noexcept { return pixels.empty(); }
  std::size_t size() const noexcept { return pixels.size(); }

  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * kChannels + c;
  }
  float& at(int y, int x, int c) noexcept { return pixels[index(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return pixels[index(y, x, c)]; }

  std::span<const float> view() const noexcept { return pixels; }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace forgepipe
