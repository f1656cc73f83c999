#include <gtest/gtest.h>

#include <cstdlib>
#include <functional>

#include "CLI11.hpp"
#include "cli.hpp"
#include "forgepipe/dataio.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace forgepipe {
namespace {

using forgepipe::testing::TempDir;
namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "forgepipe");
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  CliResult r;
  r.code = cli::run(args);
  r.out = ::testing::internal::GetCapturedStdout();
  r.err = ::testing::internal::GetCapturedStderr();
  return r;
}

nlohmann::json last_json_line(const std::string& text) {
  const auto lines = split_lines(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!it->empty()) return nlohmann::json::parse(*it);
  }
  return {};
}

void for_each_command(CLI::App* app, const std::function<void(CLI::App*)>& fn) {
  fn(app);
  for (auto* sub : app->get_subcommands([](CLI::App*) { return true; })) for_each_command(sub, fn);
}

// Runs scene -> track -> clips -> embeddings -> train-head -> score into `root`.
void run_small_pipeline(const fs::path& root) {
  const std::string r = root.string();
  auto ok = [](std::vector<std::string> args) {
    const auto res = run_cli(std::move(args));
    ASSERT_EQ(res.code, 0) << res.err;
  };
  ok({"synth", "scene", "--out", r + "/scene", "--videos", "6", "--frames", "40", "--width", "96", "--height",
      "64", "--seed", "5", "--jobs", "2"});
  ok({"track", "--manifest", r + "/scene/manifest.jsonl", "--detections", r + "/scene", "--out", r + "/tracks",
      "--aligned-size", "16", "--jobs", "2"});
  ok({"clips", "--manifest", r + "/scene/manifest.jsonl", "--tracks", r + "/tracks", "--mode", "train", "--clips",
      "4", "--out", r + "/train_clips", "--seed", "5"});
  ok({"clips", "--manifest", r + "/scene/manifest.jsonl", "--tracks", r + "/tracks", "--mode", "infer", "--out",
      r + "/infer_clips"});
  for (const std::string split : {"train", "infer"}) {
    ok({"synth", "embeddings", "--clip-index", r + "/" + split + "_clips", "--out", r + "/" + split + "_emb",
        "--dim-v", "8", "--dim-a", "8", "--seed", "3"});
  }
  ok({"train-head", "--embeddings", r + "/train_emb", "--out", r + "/head", "--hidden1", "16", "--hidden2", "8",
      "--lr0", "1e-2", "--batch-size", "1", "--seed", "1"});
  ok({"score", "--embeddings", r + "/infer_emb", "--head", r + "/head", "--out", r + "/scores.csv"});
}

TEST(Cli, HelpDocumentsEveryOption) {
  cli::State state;
  auto app = cli::make_app(state);
  std::size_t commands = 0;
  for_each_command(app.get(), [&](CLI::App* cmd) {
    ++commands;
    const std::string help = cmd->help();
    for (const CLI::Option* opt : cmd->get_options()) {
      const std::string name = opt->get_name(false, true);
      EXPECT_NE(help.find(opt->get_lnames().empty() ? name : "--" + opt->get_lnames().front()), std::string::npos)
          << cmd->get_name() << " " << name;
      EXPECT_FALSE(opt->get_description().empty()) << cmd->get_name() << " " << name;
    }
  });
  EXPECT_GE(commands, 12u);
}

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"train-head", "--help"}).code, 0);
  EXPECT_EQ(std::system((std::string(FORGEPIPE_BINARY) + " --help > /dev/null").c_str()), 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"bogus"}).code, 2);
  EXPECT_EQ(run_cli({"eval", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run_cli({"synth", "scene"}).code, 2);
}

TEST(Cli, SingleClassEvalReportsDomainError) {
  TempDir dir;
  VideoManifestEntry e;
  e.video_id = "a";
  e.frames_uri = "a.ft";
  write_manifest(dir / "m.jsonl", std::vector<VideoManifestEntry>{e});
  write_scores_csv(dir / "s.csv", std::vector<ScoreRecord>{{"a", 0, 0, 0.3f}});
  const auto res = run_cli({"eval", "--scores", (dir / "s.csv").string(), "--manifest", (dir / "m.jsonl").string()});
  EXPECT_EQ(res.code, 1);
  const auto err = last_json_line(res.err);
  EXPECT_EQ(err.at("error"), "single_class");
  EXPECT_FALSE(err.at("message").get<std::string>().empty());
}

TEST(Cli, BadConfigKeyIsParseError) {
  TempDir dir;
  write_file_atomic(dir / "c.json", R"({"head": {"hiden1": 3}})");
  const auto res = run_cli({"eval", "--config", (dir / "c.json").string(), "--scores", "x", "--manifest", "y"});
  EXPECT_EQ(res.code, 1);
  EXPECT_EQ(last_json_line(res.err).at("error"), "parse_error");
}

TEST(Cli, SmallPipelineRunsAndIsDeterministic) {
  TempDir a;
  TempDir b;
  run_small_pipeline(a.path());
  run_small_pipeline(b.path());
  ASSERT_TRUE(fs::exists(a / "scores.csv"));
  EXPECT_EQ(read_file(a / "scores.csv"), read_file(b / "scores.csv"));
  EXPECT_EQ(read_file(a.path() / "tracks" / "vid00000" / "tracks.json"),
            read_file(b.path() / "tracks" / "vid00000" / "tracks.json"));

  const auto res = run_cli({"eval", "--scores", (a / "scores.csv").string(), "--manifest",
                            (a.path() / "scene" / "manifest.jsonl").string()});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto report = last_json_line(res.out);
  EXPECT_EQ(report.at("n_videos"), 6);
  EXPECT_EQ(report.at("auc"), 1.0);
}

TEST(Cli, TrackWritesProvenanceMetadata) {
  TempDir dir;
  const std::string r = dir.path().string();
  ASSERT_EQ(run_cli({"synth", "scene", "--out", r + "/s", "--frames", "30", "--width", "64", "--height", "64",
                     "--dropout", "0.3", "--seed", "2"})
                .code,
            0);
  ASSERT_EQ(run_cli({"track", "--manifest", r + "/s/manifest.jsonl", "--detections", r + "/s", "--out", r + "/t",
                     "--aligned-size", "16"})
                .code,
            0);
  const auto doc = nlohmann::json::parse(read_file(dir.path() / "t" / "vid00000" / "tracks.json"));
  ASSERT_FALSE(doc.at("tracks").empty());
  const auto& t = doc.at("tracks")[0];
  const auto first = t.at("first_frame").get<std::int64_t>();
  const auto last = t.at("last_frame").get<std::int64_t>();
  EXPECT_EQ(t.at("provenance_mask").get<std::string>().size(), static_cast<std::size_t>(last - first + 1));
  const auto aligned = read_tensor(dir.path() / "t" / "vid00000" / "track_0.ft");
  EXPECT_EQ(aligned.dims, (std::vector<std::uint64_t>{static_cast<std::uint64_t>(last - first + 1), 16, 16, 3}));
}

TEST(Cli, LossEvalReportsLoss) {
  TempDir dir;
  const std::string r = dir.path().string();
  ASSERT_EQ(run_cli({"synth", "embeddings", "--out", r + "/e", "--videos", "8", "--clips-per-video", "1", "--dim-v",
                     "4", "--dim-a", "4"})
                .code,
            0);
  const auto res = run_cli({"loss-eval", "--embeddings", r + "/e", "--batch-size", "4", "--out", r + "/l.json"});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto report = nlohmann::json::parse(read_file(dir / "l.json"));
  EXPECT_EQ(report.at("batches"), 2);
  EXPECT_GT(report.at("loss").get<double>(), 0.0);
  EXPECT_EQ(report.at("milnce_vt"), 0.0);
}

TEST(Cli, EnrichPlanWritesLedger) {
  TempDir dir;
  const std::string r = dir.path().string();
  write_tensor(dir.path() / "audio" / "023.ft", std::vector<std::uint64_t>{50000}, std::vector<float>(50000, 0.1f));
  write_tensor(dir.path() / "audio" / "914.ft", std::vector<std::uint64_t>{1000}, std::vector<float>(1000, 0.2f));
  write_file_atomic(dir / "spec.jsonl",
                    R"({"video_id":"a","manipulation":"FaceSwap","target_id":"023","source_id":"914","frame_range":[0,29]})"
                    "\n"
                    R"({"video_id":"b","manipulation":"Face2Face","target_id":"023","source_id":"914","frame_range":[0,29]})"
                    "\n"
                    R"({"video_id":"c","manipulation":"Deepfake","target_id":"777","source_id":"914","frame_range":[0,29]})"
                    "\n");
  const auto res = run_cli({"enrich-plan", "--spec", r + "/spec.jsonl", "--audio-dir", r + "/audio", "--out", r + "/o"});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto ledger = nlohmann::json::parse(read_file(dir.path() / "o" / "ledger.json"));
  EXPECT_EQ(ledger.at("total_sources"), 3);
  EXPECT_EQ(ledger.at("with_url"), 2);
  EXPECT_EQ(ledger.at("bad_mapping"), 1);
  EXPECT_EQ(ledger.at("enriched"), 1);
  EXPECT_EQ(read_tensor(dir.path() / "o" / "audio" / "a.ft").dims, (std::vector<std::uint64_t>{44100}));
}

}  // namespace
}  // namespace forgepipe
