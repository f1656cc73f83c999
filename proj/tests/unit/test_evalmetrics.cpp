#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "forgepipe/error.hpp"
#include "forgepipe/evalmetrics.hpp"
#include "metrics_oracle.hpp"

namespace forgepipe {
namespace {

using forgepipe::testing::pair_count_auc;
using forgepipe::testing::random_auc_instance;

Errc code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected forgepipe::Error";
  return Errc::IoError;
}

VideoManifestEntry entry(std::string id, Label label, std::vector<std::string> tags = {}) {
  VideoManifestEntry e;
  e.video_id = std::move(id);
  e.label = label;
  if (label == Label::Fake) e.manipulation.kind = ManipulationKind::Deepfake;
  e.frames_uri = e.video_id + ".ft";
  e.tags = std::move(tags);
  return e;
}

// --- aggregation --------------------------------------------------------------------------

TEST(Aggregate, MeanOverClipsThenMaxOverTracks) {
  const std::vector<ScoreRecord> recs{{"v", 0, 0, 0.2f}, {"v", 0, 1, 0.4f}, {"v", 1, 0, 0.7f}, {"v", 1, 1, 0.9f}};
  const auto verdict = aggregate_video(recs);
  EXPECT_NEAR(verdict.video_score, 0.8, 1e-6);
  EXPECT_EQ(verdict.num_tracks, 2u);
  EXPECT_EQ(verdict.num_clips_used, 4u);
}

TEST(Aggregate, SingleClipIsItsScore) {
  const std::vector<ScoreRecord> recs{{"v", 3, 0, 0.625f}};
  EXPECT_EQ(aggregate_video(recs).video_score, 0.625);
}

TEST(Aggregate, MaxNotMeanAcrossTracks) {
  const std::vector<ScoreRecord> recs{{"v", 0, 0, 0.1f}, {"v", 1, 0, 0.1f}, {"v", 2, 0, 0.95f}};
  EXPECT_NEAR(aggregate_video(recs).video_score, 0.95, 1e-6);
}

TEST(Aggregate, OrderIndependent) {
  std::vector<ScoreRecord> recs{{"v", 0, 0, 0.1f}, {"v", 0, 1, 0.3f}, {"v", 0, 2, 0.7f}, {"v", 1, 0, 0.2f}};
  const double a = aggregate_video(recs).video_score;
  std::reverse(recs.begin(), recs.end());
  EXPECT_EQ(aggregate_video(recs).video_score, a);
}

TEST(Aggregate, EmptyRejected) {
  EXPECT_EQ(code_of([] { aggregate_video(std::vector<ScoreRecord>{}); }), Errc::EmptyScores);
}

TEST(Aggregate, VideosSortedWithLabels) {
  const std::vector<ScoreRecord> recs{{"b", 0, 0, 0.9f}, {"a", 0, 0, 0.1f}, {"b", 0, 1, 0.7f}};
  const std::vector<VideoManifestEntry> manifest{entry("a", Label::Real), entry("b", Label::Fake)};
  const auto v = aggregate_videos(recs, manifest);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].video_id, "a");
  EXPECT_EQ(v[0].label, 0);
  EXPECT_EQ(v[1].label, 1);
  EXPECT_NEAR(v[1].video_score, 0.8, 1e-6);
}

TEST(Aggregate, UnknownVideoRejected) {
  const std::vector<ScoreRecord> recs{{"zzz", 0, 0, 0.5f}};
  const std::vector<VideoManifestEntry> manifest{entry("a", Label::Real)};
  EXPECT_EQ(code_of([&] { aggregate_videos(recs, manifest); }), Errc::UnknownVideoId);
}

// --- AUC ----------------------------------------------------------------------------------

TEST(Auc, HandComputedWithTie) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(s, y), 0.75);
  const std::vector<double> tied{0.5, 0.5};
  const std::vector<int> ty{0, 1};
  EXPECT_DOUBLE_EQ(roc_auc(tied, ty), 0.5);
}

TEST(Auc, PerfectSeparationAndAllEqual) {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_EQ(roc_auc(s, y), 1.0);
  const std::vector<double> flat(6, 0.3);
  const std::vector<int> fy{0, 1, 0, 1, 1, 0};
  EXPECT_EQ(roc_auc(flat, fy), 0.5);
}

TEST(Auc, SingleClassRejected) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> y{1, 1};
  EXPECT_EQ(code_of([&] { roc_auc(s, y); }), Errc::SingleClass);
}

TEST(Auc, PropertyMatchesPairOracleExactly) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = random_auc_instance(rng);
    ASSERT_EQ(roc_auc(inst.scores, inst.labels), pair_count_auc(inst.scores, inst.labels)) << trial;
  }
}

TEST(Auc, PropertyLabelFlipComplements) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_auc_instance(rng);
    const double a = roc_auc(inst.scores, inst.labels);
    for (auto& y : inst.labels) y = 1 - y;
    ASSERT_NEAR(roc_auc(inst.scores, inst.labels), 1.0 - a, 1e-12);
  }
}

TEST(Auc, PropertyMonotoneTransformInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_auc_instance(rng);
    const double a = roc_auc(inst.scores, inst.labels);
    for (auto& s : inst.scores) s = std::exp(3 * s) - 7;
    ASSERT_EQ(roc_auc(inst.scores, inst.labels), a);
  }
}

TEST(Auc, VerdictOverload) {
  std::vector<VideoVerdict> v(3);
  v[0].video_score = 0.2;
  v[1].video_score = 0.9;
  v[1].label = 1;
  v[2].video_score = 0.5;
  EXPECT_EQ(roc_auc(v), 1.0);
}

// --- accuracy / filtering ---------------------------------------------------------------------

TEST(Accuracy, ThresholdInclusive) {
  std::vector<VideoVerdict> v(4);
  v[0].video_score = 0.5;
  v[0].label = 1;
  v[1].video_score = 0.49;
  v[1].label = 0;
  v[2].video_score = 0.7;
  v[2].label = 0;
  v[3].video_score = 0.1;
  v[3].label = 1;
  EXPECT_DOUBLE_EQ(accuracy(v), 0.5);
  EXPECT_DOUBLE_EQ(accuracy(v, 0.75), 0.5);
  EXPECT_EQ(code_of([] { accuracy(std::vector<VideoVerdict>{}); }), Errc::EmptyScores);
}

TEST(Filter, ExcludesTaggedVideos) {
  std::vector<VideoVerdict> v(3);
  v[0].video_id = "a";
  v[1].video_id = "b";
  v[2].video_id = "c";
  const std::vector<VideoManifestEntry> manifest{entry("a", Label::Real), entry("b", Label::Fake, {"dog_mask"}),
                                                 entry("c", Label::Fake, {"x", "multi_person"})};
  const auto kept = filter_category(v, manifest, has_any_tag({"dog_mask", "multi_person"}));
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].video_id, "a");
  EXPECT_EQ(filter_category(v, manifest, has_any_tag({})).size(), 3u);
}

}  // namespace
}  // namespace forgepipe
