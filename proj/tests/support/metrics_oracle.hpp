#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forgepipe/rng.hpp"

namespace forgepipe::testing {

// O(n^2) pair count: P(fake score > real score) + 0.5 P(tie).
inline double pair_count_auc(std::span<const double> scores, std::span<const int> labels) {
  std::int64_t twice_wins = 0;
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      ++pos;
    } else {
      ++neg;
    }
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j]) twice_wins += 2;
      if (scores[i] == scores[j]) twice_wins += 1;
    }
  }
  return static_cast<double>(twice_wins) / static_cast<double>(2 * pos * neg);
}

struct AucInstance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores drawn from a small grid so ties are frequent; both classes present.
inline AucInstance random_auc_instance(Rng& rng, std::int64_t max_n = 200) {
  AucInstance inst;
  const auto n = rng.uniform_int(2, max_n);
  const auto levels = rng.uniform_int(1, 20);
  for (std::int64_t i = 0; i < n; ++i) {
    inst.scores.push_back(static_cast<double>(rng.uniform_int(0, levels)) / static_cast<double>(levels));
    inst.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  inst.labels[0] = 0;
  inst.labels[1] = 1;
  return inst;
}

}  // namespace forgepipe::testing
