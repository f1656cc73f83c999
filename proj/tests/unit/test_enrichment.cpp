#include <gtest/gtest.h>

#include <numeric>

#include "forgepipe/enrichment.hpp"
#include "forgepipe/error.hpp"
#include "forgepipe/rng.hpp"

namespace forgepipe {
namespace {

Errc code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected forgepipe::Error";
  return Errc::IoError;
}

Manipulation kind(ManipulationKind k) { return {k, {}}; }

EnrichmentSpec spec_for(ManipulationKind k, FrameRange range = {0, 29}) {
  EnrichmentSpec s;
  s.video_id = "023_914";
  s.manipulation = kind(k);
  s.target_id = "023";
  if (k != ManipulationKind::None) s.source_id = "914";
  s.frame_range = range;
  return s;
}

AudioLookup stream_of(std::size_t n) {
  return [n](const EnrichmentSpec&, const std::string&) { return std::optional(std::vector<float>(n, 0.5f)); };
}

// --- plan_audio --------------------------------------------------------------------------

TEST(PlanAudio, FaceSwapsUseTargetAudio) {
  EXPECT_EQ(plan_audio(kind(ManipulationKind::FaceSwap), "023", "914"), AudioOrigin::TargetAudio);
  EXPECT_EQ(plan_audio(kind(ManipulationKind::Deepfake), "023", "914"), AudioOrigin::TargetAudio);
}

TEST(PlanAudio, ReenactmentsUseSourceAudio) {
  EXPECT_EQ(plan_audio(kind(ManipulationKind::NeuralTextures), "023", "914"), AudioOrigin::SourceAudio);
  EXPECT_EQ(plan_audio(kind(ManipulationKind::Face2Face), "023", "914"), AudioOrigin::SourceAudio);
}

TEST(PlanAudio, RealOwnAndOtherNone) {
  EXPECT_EQ(plan_audio(kind(ManipulationKind::None), "023", std::nullopt), AudioOrigin::OwnAudio);
  EXPECT_EQ(plan_audio(Manipulation::parse("DogMask"), "023", "914"), AudioOrigin::None);
}

TEST(PlanAudio, FakeWithoutSourceRejected) {
  EXPECT_EQ(code_of([] { plan_audio(kind(ManipulationKind::FaceSwap), "023", std::nullopt); }),
            Errc::MissingSourceId);
}

TEST(PlanAudio, OriginIds) {
  EXPECT_EQ(origin_video_id(AudioOrigin::TargetAudio, "023", "914"), "023");
  EXPECT_EQ(origin_video_id(AudioOrigin::SourceAudio, "023", "914"), "914");
  EXPECT_EQ(origin_video_id(AudioOrigin::OwnAudio, "023", std::nullopt), "023");
  EXPECT_EQ(origin_video_id(AudioOrigin::None, "023", "914"), "");
}

// --- cut_audio -------------------------------------------------------------------------------

TEST(CutAudio, OneSecond) {
  std::vector<float> stream(100000);
  std::iota(stream.begin(), stream.end(), 0.0f);
  const auto cut = cut_audio(stream, {0, 29}, TimeBase{});
  EXPECT_EQ(cut.samples.size(), 44100u);
  EXPECT_EQ(cut.start_sample, 0);
  EXPECT_EQ(cut.samples.back(), 44099.0f);
  EXPECT_FALSE(cut.degenerate);
}

TEST(CutAudio, BeyondStream) {
  const std::vector<float> stream(44099);
  EXPECT_EQ(code_of([&] { cut_audio(stream, {0, 29}, TimeBase{}); }), Errc::RangeBeyondStream);
}

TEST(CutAudio, EmptyRangeDegenerate) {
  const std::vector<float> stream(100000);
  const auto cut = cut_audio(stream, {29, 29}, TimeBase{});
  EXPECT_TRUE(cut.samples.empty());
  EXPECT_TRUE(cut.degenerate);
  EXPECT_EQ(cut.start_sample, 44100);
}

TEST(CutAudio, PropertyLengthMatchesFrameArithmetic) {
  Rng rng(1);
  const std::vector<float> stream(2'000'000);
  for (int trial = 0; trial < 200; ++trial) {
    const TimeBase tb{{rng.uniform_int(24, 60), 1}, rng.uniform_int(8000, 48000)};
    const auto start = rng.uniform_int(0, 300);
    const auto end = start + rng.uniform_int(0, 300);
    const auto cut = cut_audio(stream, {start, end}, tb);
    ASSERT_EQ(static_cast<std::int64_t>(cut.samples.size()), frame_to_sample(end, tb) - frame_to_sample(start, tb));
  }
}

// --- enrich --------------------------------------------------------------------------------

TEST(Enrich, AllFourManipulationsMapped) {
  const std::pair<ManipulationKind, AudioOrigin> cases[] = {
      {ManipulationKind::Deepfake, AudioOrigin::TargetAudio},
      {ManipulationKind::FaceSwap, AudioOrigin::TargetAudio},
      {ManipulationKind::Face2Face, AudioOrigin::SourceAudio},
      {ManipulationKind::NeuralTextures, AudioOrigin::SourceAudio},
  };
  for (const auto& [k, origin] : cases) {
    const auto r = enrich(spec_for(k), TimeBase{}, stream_of(50000));
    EXPECT_EQ(r.record.audio_origin, origin);
    EXPECT_EQ(r.record.status, EnrichmentStatus::Enriched);
    EXPECT_EQ(r.record.num_samples, 44100);
    ASSERT_TRUE(r.audio.has_value());
  }
}

TEST(Enrich, NoStreamMeansNoUrl) {
  const AudioLookup none = [](const EnrichmentSpec&, const std::string&) { return std::optional<std::vector<float>>(); };
  EXPECT_EQ(enrich(spec_for(ManipulationKind::FaceSwap), TimeBase{}, none).record.status,
            EnrichmentStatus::UnenrichedNoURL);
}

TEST(Enrich, ShortStreamIsBadMapping) {
  const auto r = enrich(spec_for(ManipulationKind::FaceSwap), TimeBase{}, stream_of(1000));
  EXPECT_EQ(r.record.status, EnrichmentStatus::UnenrichedBadMapping);
  EXPECT_FALSE(r.audio.has_value());
}

TEST(Enrich, UnverifiedMappingIsBadMapping) {
  auto s = spec_for(ManipulationKind::Face2Face);
  s.mapping_verified = false;
  EXPECT_EQ(enrich(s, TimeBase{}, stream_of(50000)).record.status, EnrichmentStatus::UnenrichedBadMapping);
}

TEST(Enrich, SpecLineParsing) {
  const auto s = parse_enrichment_line(
      R"({"video_id":"023_914","manipulation":"NeuralTextures","target_id":"023","source_id":"914","frame_range":[10,40]})",
      1);
  EXPECT_EQ(s.manipulation.kind, ManipulationKind::NeuralTextures);
  EXPECT_EQ(s.frame_range, (FrameRange{10, 40}));
  EXPECT_EQ(s.source_id, std::optional<std::string>("914"));
  EXPECT_THROW(parse_enrichment_line(R"({"video_id":"x"})", 3), ParseError);
}

// --- ledger ------------------------------------------------------------------------------------

std::vector<EnrichmentRecord> records_with(std::int64_t enriched, std::int64_t bad, std::int64_t no_url) {
  std::vector<EnrichmentRecord> out;
  auto add = [&out](std::int64_t n, EnrichmentStatus status) {
    for (std::int64_t i = 0; i < n; ++i) {
      EnrichmentRecord r;
      r.status = status;
      r.audio_origin = AudioOrigin::TargetAudio;
      out.push_back(r);
    }
  };
  add(enriched, EnrichmentStatus::Enriched);
  add(bad, EnrichmentStatus::UnenrichedBadMapping);
  add(no_url, EnrichmentStatus::UnenrichedNoURL);
  return out;
}

TEST(Ledger, PublishedCounts) {
  const auto l = build_ledger(records_with(701, 36, 263));
  EXPECT_EQ(l.with_url, 737);
  EXPECT_EQ(l.bad_mapping, 36);
  EXPECT_EQ(l.enriched, 701);
  EXPECT_EQ(l.total_sources, 1000);
  EXPECT_EQ(ledger_from_counts(1000, 737, 36), l);
}

TEST(Ledger, AllGoodAndEmpty) {
  const auto l = build_ledger(records_with(10, 0, 0));
  EXPECT_EQ(l.enriched, l.with_url);
  EXPECT_EQ(build_ledger(std::vector<EnrichmentRecord>{}), EnrichmentLedger{});
}

TEST(Ledger, PropertyArithmeticInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto l = build_ledger(records_with(rng.uniform_int(0, 50), rng.uniform_int(0, 50), rng.uniform_int(0, 50)));
    ASSERT_EQ(l.enriched, l.with_url - l.bad_mapping);
    ASSERT_LE(l.enriched, l.with_url);
    ASSERT_LE(l.with_url, l.total_sources);
  }
}

TEST(Ledger, InconsistentCountsRejected) {
  EXPECT_THROW(ledger_from_counts(10, 11, 0), Error);
  EXPECT_THROW(ledger_from_counts(10, 5, 6), Error);
  EXPECT_EQ(format_ledger_json(ledger_from_counts(3, 2, 1)),
            R"({"total_sources":3,"with_url":2,"bad_mapping":1,"enriched":1})");
}

}  // namespace
}  // namespace forgepipe
