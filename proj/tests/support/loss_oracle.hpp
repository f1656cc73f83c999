#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "forgepipe/losses.hpp"
#include "forgepipe/rng.hpp"

namespace forgepipe::testing {

// K videos with d-dimensional Gaussian vectors. When with_text is set every
// entry gets 1..max_pos text candidates.
inline ContrastiveBatch random_contrastive_batch(Rng& rng, std::size_t k, std::size_t d, bool with_text,
                                                 std::int64_t max_pos = 3) {
  auto draw = [&] {
    Vec v(d);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  ContrastiveBatch batch;
  for (std::size_t i = 0; i < k; ++i) {
    ContrastiveEntry e;
    e.visual_va = draw();
    e.audio_va = draw();
    if (with_text) {
      e.visual_vat = draw();
      const auto n = rng.uniform_int(1, max_pos);
      for (std::int64_t p = 0; p < n; ++p) e.text.push_back(draw());
    }
    batch.entries.push_back(std::move(e));
  }
  return batch;
}

// Visits every vector of a batch in a fixed order.
inline void for_each_vector(ContrastiveBatch& batch, const std::function<void(Vec&)>& fn) {
  for (auto& e : batch.entries) {
    fn(e.visual_va);
    fn(e.audio_va);
    if (!e.visual_vat.empty()) fn(e.visual_vat);
    for (auto& t : e.text) fn(t);
  }
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// Central differences of combined_loss against its analytic gradient. The
// relative error of one coordinate is |a - n| / max(|a|, |n|, floor).
inline GradientCheck check_gradient(const ContrastiveBatch& batch, const LossConfig& cfg, double h,
                                    double floor = 1e-6) {
  const auto analytic = combined_loss(batch, cfg).gradient;
  std::vector<double> grads;
  auto copy = analytic;
  for_each_vector(copy, [&](Vec& v) { grads.insert(grads.end(), v.begin(), v.end()); });

  GradientCheck out;
  ContrastiveBatch probe = batch;
  std::vector<double*> coords;
  for_each_vector(probe, [&](Vec& v) {
    for (auto& x : v) coords.push_back(&x);
  });
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double orig = *coords[i];
    *coords[i] = orig + h;
    const double up = combined_loss(probe, cfg).loss;
    *coords[i] = orig - h;
    const double down = combined_loss(probe, cfg).loss;
    *coords[i] = orig;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(grads[i]), std::abs(numeric), floor});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(grads[i] - numeric) / denom);
  }
  out.coordinates = coords.size();
  return out;
}

}  // namespace forgepipe::testing
