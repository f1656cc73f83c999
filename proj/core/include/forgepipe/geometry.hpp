#pragma once

#include <array>
#include <filesystem>
#include <string_view>

#include "forgepipe/image.hpp"

namespace forgepipe {

inline constexpr int kAlignedSize = 224;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Top-left origin, pixel units.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  Point2 center() const noexcept { return {x + 0.5 * w, y + 0.5 * h}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Fixed order: left-eye-outer, left-eye-inner, nose, right-eye-inner,
// right-eye-outer.
using LandmarkSet5 = std::array<Point2, 5>;

bool landmarks_finite(const LandmarkSet5& points) noexcept;

// Axis-aligned rectangle enclosing the landmarks.
BoundingBox landmark_bounds(const LandmarkSet5& points) noexcept;

// Intersection over union. Zero-area boxes always give 0.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

// Scales width and height by `factor` about the box center. No clamping.
BoundingBox enlarge(const BoundingBox& box, double factor);

// x' = s R(theta) x + t, no reflection.
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  // Row-major 2x3: [s cos, -s sin, tx; s sin, s cos, ty].
  std::array<double, 6> matrix() const noexcept;
  static SimilarityTransform from_matrix(const std::array<double, 6>& m);

  Point2 apply(Point2 p) const noexcept;
  SimilarityTransform inverse() const noexcept;
};

struct SimilarityEstimate {
  SimilarityTransform transform;
  // Root-mean-square distance between T(src_i) and dst_i.
  double residual = 0.0;
};

// Closed-form least-squares similarity mapping src onto dst. Throws
// DegenerateConfiguration when src collapses to a point or the fit has no
// scale (dst collapses).
SimilarityEstimate estimate_similarity(const LandmarkSet5& src, const LandmarkSet5& dst);

// Each output pixel (u, v) samples the source bilinearly at
// transform^-1(u, v); taps outside the frame read as zero.
Image warp_frame(const Image& frame, const SimilarityTransform& transform,
                 int out_width = kAlignedSize, int out_height = kAlignedSize);

// Template in the 224x224 aligned frame. Overridable through
// {"reference_landmarks": [[x, y], ...5]}.
LandmarkSet5 default_reference_face() noexcept;
LandmarkSet5 parse_reference_face(std::string_view json_text);
LandmarkSet5 load_reference_face(const std::filesystem::path& path);

}  // namespace forgepipe
