#include <gtest/gtest.h>

#include <set>

#include "forgepipe/error.hpp"
#include "forgepipe/rng.hpp"

namespace forgepipe {
namespace {

TEST(ErrorCodes, SnakeCaseNames) {
  EXPECT_EQ(errc_name(Errc::SingleClass), "single_class");
  EXPECT_EQ(errc_name(Errc::RangeBeyondStream), "range_beyond_stream");
  EXPECT_EQ(errc_name(Errc::NonMonotoneFrames), "non_monotone_frames");
}

TEST(ErrorCodes, ErrorCarriesCode) {
  try {
    throw Error(Errc::EvenWindow, "window 4");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EvenWindow);
    EXPECT_STREQ(e.what(), "window 4");
  }
}

TEST(StableHash, MatchesPublishedFnv1aVectors) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(stable_hash("foobar"), 0x85944171f73967e8ULL);
}

TEST(MixKey, DistinctStreamsGiveDistinctSeeds) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(mix_key(7, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(mix_key(1, 2, 3), mix_key(1, 3, 2));
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, UniformIntCoversInclusiveRange) {
  Rng rng(3);
  std::array<int, 7> counts{};
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ++counts[static_cast<std::size_t>(v + 3)];
  }
  for (int c : counts) EXPECT_GT(c, 800);
  EXPECT_EQ(rng.uniform_int(5, 5), 5);
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 50000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(s2 / n - mean * mean, 1.0, 0.03);
}

}  // namespace
}  // namespace forgepipe
