#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "forgepipe/config.hpp"
#include "forgepipe/synth.hpp"

namespace CLI {
class App;
}

namespace forgepipe::cli {

namespace fs = std::filesystem;

// Flags shared by every subcommand.
struct CommonOptions {
  fs::path config;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  fs::path out;
};

struct SynthSceneOptions {
  std::int64_t videos = 1;
  int persons = 1;
  int distractors = 0;
  double dropout = 0.0;
  std::int64_t frames = 60;
  int width = 320;
  int height = 240;
  double fake_fraction = 0.5;
  bool no_audio = false;
};

struct SynthEmbeddingOptions {
  EmbeddingDatasetSpec spec;
  fs::path clip_index;
};

struct TrackOptions {
  fs::path manifest;
  fs::path detections;
  fs::path reference_face;
  std::string multi_face = "auto";
  int aligned_size = 224;
};

struct ClipsOptions {
  fs::path manifest;
  fs::path tracks;
  std::string mode = "infer";
  std::int64_t clips = 0;  // 0: config value for the mode
  std::string fps;
};

struct AugmentOptions {
  fs::path clips;
};

struct LossEvalOptions {
  fs::path embeddings;
  fs::path text;
  fs::path batch_spec;
  fs::path dump_gradients;
  std::size_t batch_size = 8;
  std::string negatives = "symmetric";
  bool raw_dot = false;
};

struct TrainHeadOptions {
  fs::path embeddings;
  bool no_balance = false;
};

struct ScoreOptions {
  fs::path embeddings;
  fs::path head;
};

struct EvalOptions {
  fs::path scores;
  fs::path manifest;
};

struct EnrichOptions {
  fs::path spec;
  std::string fps;
  std::string audio_dir;
};

struct State {
  PipelineConfig cfg;
  CommonOptions common;
  SynthSceneOptions scene;
  SynthEmbeddingOptions embed;
  TrackOptions track;
  ClipsOptions clips;
  AugmentOptions augment;
  LossEvalOptions loss;
  TrainHeadOptions train;
  ScoreOptions score;
  EvalOptions eval;
  EnrichOptions enrich;
};

// Builds the full command tree with every option bound into `state`.
// Defaults shown in --help come from state.cfg.
std::unique_ptr<CLI::App> make_app(State& state);

// Entry point used by main. Returns 0 on success, 1 on a domain error
// (reported as JSON on stderr) and 2 on a usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

// Subcommand bodies. Each reads its inputs from `state`.
void cmd_synth_scene(const State& state);
void cmd_synth_embeddings(const State& state);
void cmd_track(const State& state);
void cmd_clips(const State& state);
void cmd_augment(const State& state);
void cmd_loss_eval(const State& state);
void cmd_train_head(const State& state);
void cmd_score(const State& state);
void cmd_eval(const State& state);
void cmd_enrich_plan(const State& state);

}  // namespace forgepipe::cli
