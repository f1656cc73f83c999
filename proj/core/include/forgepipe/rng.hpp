#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace forgepipe {

// Mixes a seed with up to three stream identifiers (entity, frame, ...) into
// an engine seed. Regenerating one entity never shifts another's draws.
std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0) noexcept;

// FNV-1a of a string id; std::hash is not stable across standard libraries.
std::uint64_t stable_hash(std::string_view text) noexcept;

// Portable draws on top of std::mt19937_64. The std distributions are not
// reproducible across standard libraries, so the transforms live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng keyed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                   std::uint64_t c = 0) {
    return Rng(mix_key(seed, a, b, c));
  }

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive on both ends; unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace forgepipe
