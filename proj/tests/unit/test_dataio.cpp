#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>

#include "forgepipe/dataio.hpp"
#include "forgepipe/error.hpp"
#include "forgepipe/rng.hpp"
#include "test_support.hpp"

namespace forgepipe {
namespace {

using forgepipe::testing::TempDir;

Errc code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected forgepipe::Error";
  return Errc::IoError;
}

// Builds the FOTENSR1 byte layout by hand, independent of encode_tensor.
std::string manual_tensor_bytes(const std::vector<std::uint64_t>& dims, const std::vector<float>& values) {
  std::string out = "FOTENSR1";
  auto put = [&out](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  const std::uint32_t dtype = 0;
  const auto ndim = static_cast<std::uint32_t>(dims.size());
  put(&dtype, 4);
  put(&ndim, 4);
  for (auto d : dims) put(&d, 8);
  for (float v : values) put(&v, 4);
  return out;
}

// --- Rational / manifest -----------------------------------------------------

TEST(Rational, ParsesFractionAndInteger) {
  EXPECT_EQ(Rational::parse("29/1"), (Rational{29, 1}));
  EXPECT_EQ(Rational::parse("30000/1001"), (Rational{30000, 1001}));
  EXPECT_EQ(Rational::parse("25"), (Rational{25, 1}));
  EXPECT_EQ((Rational{30000, 1001}).to_string(), "30000/1001");
}

TEST(Manifest, ParsesRealEntry) {
  const auto e = parse_manifest_line(
      R"({"video_id":"v1","label":"Real","manipulation":"None","fps":"29/1","sample_rate":44100,"num_frames":87,"frames_uri":"v1.ft"})",
      1);
  EXPECT_EQ(e.video_id, "v1");
  EXPECT_EQ(e.label, Label::Real);
  EXPECT_EQ(e.manipulation.kind, ManipulationKind::None);
  EXPECT_EQ(e.fps, (Rational{29, 1}));
  EXPECT_EQ(e.sample_rate, 44100);
  EXPECT_EQ(e.num_frames, 87);
  EXPECT_FALSE(e.audio_uri.has_value());
}

TEST(Manifest, FakeFaceSwapMapsEnum) {
  const auto e = parse_manifest_line(
      R"({"video_id":"v2","label":"Fake","manipulation":"FaceSwap","fps":"29/1","sample_rate":44100,"num_frames":10,"frames_uri":"v2.ft"})",
      1);
  EXPECT_EQ(e.label, Label::Fake);
  EXPECT_EQ(e.manipulation.kind, ManipulationKind::FaceSwap);
}

TEST(Manifest, UnknownManipulationIsOther) {
  const auto e = parse_manifest_line(
      R"({"video_id":"v3","label":"Fake","manipulation":"DogMask","fps":"29/1","sample_rate":44100,"num_frames":10,"frames_uri":"v3.ft"})",
      1);
  EXPECT_EQ(e.manipulation.kind, ManipulationKind::Other);
  EXPECT_EQ(e.manipulation.name(), "DogMask");
}

TEST(Manifest, ZeroSampleRateIsInvariantError) {
  EXPECT_EQ(code_of([] {
              parse_manifest_line(
                  R"({"video_id":"v1","label":"Real","manipulation":"None","fps":"29/1","sample_rate":0,"num_frames":87,"frames_uri":"v1.ft"})",
                  1);
            }),
            Errc::InvariantError);
}

TEST(Manifest, RealWithManipulationRejected) {
  EXPECT_EQ(code_of([] {
              parse_manifest_line(
                  R"({"video_id":"v1","label":"Real","manipulation":"Deepfake","fps":"29/1","sample_rate":1,"num_frames":1,"frames_uri":"v1.ft"})",
                  1);
            }),
            Errc::InvariantError);
}

TEST(Manifest, MalformedJsonReportsLine) {
  TempDir dir;
  write_file_atomic(dir / "m.jsonl",
                    R"({"video_id":"v1","label":"Real","manipulation":"None","fps":"29/1","sample_rate":44100,"num_frames":87,"frames_uri":"v1.ft"})"
                    "\n{not json\n");
  try {
    read_manifest(dir / "m.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Manifest, RoundTripKeepsOrderAndCount) {
  TempDir dir;
  std::vector<VideoManifestEntry> entries;
  for (int i = 0; i < 5; ++i) {
    VideoManifestEntry e;
    e.video_id = "v" + std::to_string(i);
    e.label = i % 2 ? Label::Fake : Label::Real;
    if (i % 2) e.manipulation.kind = ManipulationKind::NeuralTextures;
    e.frames_uri = e.video_id + ".ft";
    if (i == 3) e.audio_uri = "a3.ft";
    e.fps = {30000, 1001};
    e.num_frames = 10 + i;
    e.tags = {"t" + std::to_string(i)};
    entries.push_back(e);
  }
  write_manifest(dir / "m.jsonl", entries);
  EXPECT_EQ(read_manifest(dir / "m.jsonl"), entries);
}

// --- Tensors ------------------------------------------------------------------

TEST(Tensor, HeaderLayoutMatchesHandBuiltBytes) {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(encode_tensor(t), manual_tensor_bytes({2, 3}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(encode_tensor(t).size(), 8u + 4 + 4 + 16 + 24);
}

TEST(Tensor, RoundTripTwoByThree) {
  TempDir dir;
  const std::vector<std::uint64_t> dims{2, 3};
  const std::vector<float> values{0.5f, -1.0f, 3.25f, 1e-30f, 7.0f, -0.0f};
  write_tensor(dir / "t.ft", dims, values);
  const Tensor back = read_tensor(dir / "t.ft");
  EXPECT_EQ(back.dims, dims);
  ASSERT_EQ(back.data.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(back.data[i]), std::bit_cast<std::uint32_t>(values[i]));
  }
}

TEST(Tensor, FrameSizedPayloadAccepted) {
  const Tensor t({224, 224, 3}, std::vector<float>(150528, 0.25f));
  EXPECT_EQ(t.element_count(), 150528u);
  EXPECT_EQ(decode_tensor(encode_tensor(t)), t);
}

TEST(Tensor, PropertyRandomRoundTripIsBitExact) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint64_t> dims;
    const auto ndim = rng.uniform_int(1, 4);
    std::uint64_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      dims.push_back(static_cast<std::uint64_t>(rng.uniform_int(1, 6)));
      n *= dims.back();
    }
    std::vector<float> values(n);
    for (auto& v : values) {
      std::uint32_t bits = static_cast<std::uint32_t>(rng.next_u64());
      v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) v = static_cast<float>(rng.normal());
    }
    const Tensor t(dims, values);
    const Tensor back = decode_tensor(encode_tensor(t));
    ASSERT_EQ(back.dims, dims);
    ASSERT_EQ(std::memcmp(back.data.data(), values.data(), n * 4), 0);
  }
}

TEST(Tensor, BadMagicRejected) {
  std::string bytes = manual_tensor_bytes({1}, {1.0f});
  bytes.replace(0, 8, "XXXXXXXX");
  EXPECT_EQ(code_of([&] { decode_tensor(bytes); }), Errc::BadMagic);
}

TEST(Tensor, TruncatedPayloadRejected) {
  std::string bytes = manual_tensor_bytes({4}, {1, 2, 3, 4});
  bytes.resize(bytes.size() - 2);
  EXPECT_EQ(code_of([&] { decode_tensor(bytes); }), Errc::TruncatedPayload);
  EXPECT_EQ(code_of([&] { decode_tensor(bytes.substr(0, 10)); }), Errc::TruncatedPayload);
}

TEST(Tensor, DimOverflowRejected) {
  const std::uint64_t huge = std::numeric_limits<std::uint64_t>::max() / 2;
  std::string bytes = manual_tensor_bytes({huge, 4}, {});
  EXPECT_EQ(code_of([&] { decode_tensor(bytes); }), Errc::DimOverflow);
}

TEST(Tensor, ZeroDimRejected) {
  EXPECT_EQ(code_of([&] { decode_tensor(manual_tensor_bytes({0}, {})); }), Errc::InvariantError);
}

TEST(Tensor, WriteChecksValueCount) {
  TempDir dir;
  const std::vector<std::uint64_t> dims{2, 2};
  const std::vector<float> values{1, 2, 3};
  EXPECT_EQ(code_of([&] { write_tensor(dir / "t.ft", dims, values); }), Errc::DimensionMismatch);
}

// --- Detections ---------------------------------------------------------------

constexpr const char* kFace =
    R"({"bbox":[10,20,30,40],"confidence":0.99,"landmarks":[[1,2],[3,4],[5,6],[7,8],[9,10]]})";

TEST(Detections, GapsPermitted) {
  const std::string text = std::string(R"({"frame_index":0,"faces":[)") + kFace + "]}\n" +
                           R"({"frame_index":2,"faces":[)" + kFace + "]}\n";
  const auto dets = parse_detections(text);
  EXPECT_EQ(dets.size(), 2u);
  EXPECT_EQ(dets.count(1), 0u);
  const auto& f = dets.at(2).faces.at(0);
  EXPECT_EQ(f.bbox, (BoundingBox{10, 20, 30, 40}));
  EXPECT_FLOAT_EQ(f.confidence, 0.99f);
  ASSERT_TRUE(f.landmarks.has_value());
  EXPECT_EQ((*f.landmarks)[4], (Point2{9, 10}));
}

TEST(Detections, NonMonotoneRejected) {
  const std::string text = std::string(R"({"frame_index":3,"faces":[]})") + "\n" + R"({"frame_index":1,"faces":[]})";
  EXPECT_EQ(code_of([&] { parse_detections(text); }), Errc::NonMonotoneFrames);
}

TEST(Detections, FourLandmarksRejected) {
  const std::string line =
      R"({"frame_index":0,"faces":[{"bbox":[0,0,1,1],"confidence":0.9,"landmarks":[[1,2],[3,4],[5,6],[7,8]]}]})";
  EXPECT_EQ(code_of([&] { parse_detection_line(line, 1); }), Errc::InvariantError);
}

TEST(Detections, ConfidenceOutsideUnitRejected) {
  const std::string line = R"({"frame_index":0,"faces":[{"bbox":[0,0,1,1],"confidence":1.5}]})";
  EXPECT_EQ(code_of([&] { parse_detection_line(line, 1); }), Errc::InvariantError);
}

TEST(Detections, FormatParseRoundTrip) {
  TempDir dir;
  DetectionMap m;
  for (std::int64_t f : {0, 1, 5}) {
    FrameDetections fd;
    fd.frame_index = f;
    FaceDetection a;
    a.bbox = {1.5, 2.25, 10, 12};
    a.confidence = 0.97f;
    a.landmarks = LandmarkSet5{{{1, 1}, {2, 1}, {3, 3}, {4, 1}, {5, 1}}};
    FaceDetection b;
    b.bbox = {50, 60, 5, 5};
    b.confidence = 0.5f;
    fd.faces = {a, b};
    m[f] = fd;
  }
  write_detections(dir / "d.jsonl", m);
  EXPECT_EQ(read_detections(dir / "d.jsonl"), m);
}

// --- Scores -------------------------------------------------------------------

TEST(Scores, SixDecimalFixedPoint) {
  const std::vector<ScoreRecord> recs{{"v1", 0, 0, 0.5f}, {"v1", 1, 2, 1.0f / 3.0f}};
  EXPECT_EQ(format_scores_csv(recs), "video_id,track_id,clip_index,score\nv1,0,0,0.500000\nv1,1,2,0.333333\n");
}

TEST(Scores, ParseRoundTrip) {
  const std::vector<ScoreRecord> recs{{"a", 0, 0, 0.25f}, {"b", 3, 8, 0.75f}};
  EXPECT_EQ(parse_scores_csv(format_scores_csv(recs)), recs);
}

TEST(Scores, OutOfRangeRejected) {
  EXPECT_THROW(parse_scores_csv("video_id,track_id,clip_index,score\nv,0,0,1.5\n"), Error);
  EXPECT_THROW(parse_scores_csv("wrong,header\n"), ParseError);
}

// --- Embedding sets -------------------------------------------------------------

TEST(EmbeddingSet, RoundTripWithAudio) {
  TempDir dir;
  EmbeddingSet set;
  set.keys = {{"a", 0, 0}, {"a", 0, 1}, {"b", 1, 0}};
  set.labels = {0, 0, kUnknownLabel};
  set.visual = Tensor({3, 2}, {1, 2, 3, 4, 5, 6});
  set.audio = Tensor({3, 1}, {7, 8, 9});
  write_embedding_set(dir.path() / "e", set);
  const EmbeddingSet back = read_embedding_set(dir.path() / "e");
  EXPECT_EQ(back.keys, set.keys);
  EXPECT_EQ(back.labels, set.labels);
  EXPECT_EQ(back.visual, set.visual);
  ASSERT_TRUE(back.audio.has_value());
  EXPECT_EQ(*back.audio, *set.audio);
  EXPECT_EQ(back.visual_row(1)[1], 4.0f);
}

TEST(Files, AtomicWriteCreatesParents) {
  TempDir dir;
  const auto p = dir.path() / "x" / "y" / "f.txt";
  write_file_atomic(p, "hello");
  EXPECT_EQ(read_file(p), "hello");
  EXPECT_THROW(read_file(dir.path() / "missing"), Error);
}

}  // namespace
}  // namespace forgepipe
