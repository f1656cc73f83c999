#include "forgepipe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "forgepipe/error.hpp"
#include "json.hpp"

namespace forgepipe {

bool landmarks_finite(const LandmarkSet5& points) noexcept {
  return std::all_of(points.begin(), points.end(), [](const Point2& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
  });
}

BoundingBox landmark_bounds(const LandmarkSet5& points) noexcept {
  double x0 = points[0].x, x1 = points[0].x;
  double y0 = points[0].y, y1 = points[0].y;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double area_a = a.area();
  const double area_b = b.area();
  if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox enlarge(const BoundingBox& box, double factor) {
  if (!(factor > 0.0)) {
    throw Error(Errc::NonPositiveFactor, "enlarge factor must be positive");
  }
  if (factor == 1.0) return box;
  const Point2 c = box.center();
  const double w = box.w * factor;
  const double h = box.h * factor;
  return {c.x - 0.5 * w, c.y - 0.5 * h, w, h};
}

std::array<double, 6> SimilarityTransform::matrix() const noexcept {
  const double c = scale * std::cos(rotation);
  const double s = scale * std::sin(rotation);
  return {c, -s, tx, s, c, ty};
}

SimilarityTransform SimilarityTransform::from_matrix(const std::array<double, 6>& m) {
  const double a = 0.5 * (m[0] + m[4]);
  const double b = 0.5 * (m[3] - m[1]);
  const double s = std::hypot(a, b);
  if (!(s > 0.0)) {
    throw Error(Errc::InvariantError, "similarity matrix has zero scale");
  }
  return {s, std::atan2(b, a), m[2], m[5]};
}

Point2 SimilarityTransform::apply(Point2 p) const noexcept {
  const auto m = matrix();
  return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
}

SimilarityTransform SimilarityTransform::inverse() const noexcept {
  const double inv_scale = 1.0 / scale;
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  // -R^T t / scale
  const double itx = -(c * tx + s * ty) * inv_scale;
  const double ity = -(-s * tx + c * ty) * inv_scale;
  return {inv_scale, -rotation, itx, ity};
}

SimilarityEstimate estimate_similarity(const LandmarkSet5& src, const LandmarkSet5& dst) {
  if (!landmarks_finite(src) || !landmarks_finite(dst)) {
    throw Error(Errc::InvariantError, "landmarks must be finite");
  }
  constexpr double n = 5.0;
  Point2 ms, md;
  for (std::size_t i = 0; i < 5; ++i) {
    ms.x += src[i].x;
    ms.y += src[i].y;
    md.x += dst[i].x;
    md.y += dst[i].y;
  }
  ms = {ms.x / n, ms.y / n};
  md = {md.x / n, md.y / n};

  // In complex form dst' = c * src' with c = a + ib = s e^{i theta}; the
  // least-squares c is <src', dst'> / |src'|^2.
  double var = 0.0, dot = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double px = src[i].x - ms.x, py = src[i].y - ms.y;
    const double qx = dst[i].x - md.x, qy = dst[i].y - md.y;
    var += px * px + py * py;
    dot += px * qx + py * qy;
    cross += px * qy - py * qx;
  }
  if (!(var > 1e-12)) {
    throw Error(Errc::DegenerateConfiguration, "source landmarks are coincident");
  }
  const double a = dot / var;
  const double b = cross / var;
  const double scale = std::hypot(a, b);
  if (!(scale > 1e-12)) {
    throw Error(Errc::DegenerateConfiguration, "destination landmarks are coincident");
  }

  SimilarityEstimate est;
  est.transform.scale = scale;
  est.transform.rotation = std::atan2(b, a);
  est.transform.tx = md.x - (a * ms.x - b * ms.y);
  est.transform.ty = md.y - (b * ms.x + a * ms.y);

  double sq = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double px = src[i].x, py = src[i].y;
    const double ex = a * px - b * py + est.transform.tx - dst[i].x;
    const double ey = b * px + a * py + est.transform.ty - dst[i].y;
    sq += ex * ex + ey * ey;
  }
  est.residual = std::sqrt(sq / n);
  return est;
}

Image warp_frame(const Image& frame, const SimilarityTransform& transform, int out_width,
                 int out_height) {
  if (frame.empty() || frame.width <= 0 || frame.height <= 0) {
    throw Error(Errc::EmptyFrame, "cannot warp an empty frame");
  }
  if (out_width <= 0 || out_height <= 0) {
    throw Error(Errc::InvariantError, "output size must be positive");
  }
  // Inverse of [A | t] is [A^T / s^2 | -A^T t / s^2]; exact for the identity.
  const auto m = transform.matrix();
  const double s2 = m[0] * m[0] + m[3] * m[3];
  const double i00 = m[0] / s2, i01 = m[3] / s2;
  const double i10 = m[1] / s2, i11 = m[4] / s2;
  const double i02 = -(i00 * m[2] + i01 * m[5]);
  const double i12 = -(i10 * m[2] + i11 * m[5]);

  Image out(out_height, out_width, 0.0f);
  const int w = frame.width, h = frame.height;
  for (int v = 0; v < out_height; ++v) {
    for (int u = 0; u < out_width; ++u) {
      const double sx = i00 * u + i01 * v + i02;
      const double sy = i10 * u + i11 * v + i12;
      if (!(sx > -1.0 && sx < w && sy > -1.0 && sy < h)) continue;
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const double ax = sx - fx0, ay = sy - fy0;
      const double wts[4] = {(1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int c = 0; c < Image::kChannels; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          if (wts[k] == 0.0) continue;
          if (xs[k] < 0 || xs[k] >= w || ys[k] < 0 || ys[k] >= h) continue;
          acc += wts[k] * frame.at(ys[k], xs[k], c);
        }
        out.at(v, u, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

LandmarkSet5 default_reference_face() noexcept {
  return {{{70.7, 85.0}, {98.0, 85.0}, {112.0, 120.0}, {126.0, 85.0}, {153.3, 85.0}}};
}

LandmarkSet5 parse_reference_face(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, e.what());
  }
  const auto it = doc.find("reference_landmarks");
  if (it == doc.end() || !it->is_array() || it->size() != 5) {
    throw Error(Errc::InvariantError, "reference_landmarks must list exactly 5 points");
  }
  LandmarkSet5 ref;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& p = (*it)[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(Errc::InvariantError, "reference landmark must be [x, y]");
    }
    ref[i] = {p[0].get<double>(), p[1].get<double>()};
  }
  if (!landmarks_finite(ref)) {
    throw Error(Errc::InvariantError, "reference landmarks must be finite");
  }
  return ref;
}

LandmarkSet5 load_reference_face(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_reference_face(ss.str());
}

}  // namespace forgepipe
