#include <cstdlib>
#include <iostream>
#include <string_view>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cli.hpp"
#include "forgepipe/error.hpp"
#include "json.hpp"

namespace forgepipe::cli {
namespace {

void add_common(CLI::App* sub, State& s, bool with_out = true) {
  sub->add_option("--config", s.common.config, "JSON pipeline config; flags override its values")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", s.common.seed, "Seed for every random draw of this command")
      ->capture_default_str();
  sub->add_option("--jobs", s.common.jobs, "Worker threads for per-video work")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  if (with_out) sub->add_option("--out", s.common.out, "Output path")->required();
}

void add_time_base(CLI::App* sub, std::string& fps, std::int64_t& sample_rate) {
  sub->add_option("--fps", fps, "Target frame rate as num/den")->capture_default_str();
  sub->add_option("--sample-rate", sample_rate, "Target audio sample rate in Hz")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void build(CLI::App& app, State& s) {
  PipelineConfig& cfg = s.cfg;
  s.clips.fps = cfg.sampling.time_base.fps.to_string();
  s.enrich.fps = cfg.enrichment.time_base.fps.to_string();
  s.enrich.audio_dir = cfg.enrichment.audio_dir.string();

  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  // synth --------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate synthetic scenes or embeddings");
  synth->require_subcommand(1);

  auto* scene = synth->add_subcommand("scene", "Render synthetic videos with detections and ground truth");
  add_common(scene, s);
  scene->add_option("--videos", s.scene.videos, "Number of videos")->check(CLI::PositiveNumber)->capture_default_str();
  scene->add_option("--persons", s.scene.persons, "Persons per video")->check(CLI::Range(1, 8))->capture_default_str();
  scene->add_option("--distractors", s.scene.distractors, "Distractor faces per video")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  scene->add_option("--dropout", s.scene.dropout, "Per-frame detection miss probability")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  scene->add_option("--frames", s.scene.frames, "Frames per video")->check(CLI::Range(12, 100000))->capture_default_str();
  scene->add_option("--width", s.scene.width, "Frame width in pixels")->check(CLI::Range(64, 4096))->capture_default_str();
  scene->add_option("--height", s.scene.height, "Frame height in pixels")->check(CLI::Range(64, 4096))->capture_default_str();
  scene->add_option("--fake-fraction", s.scene.fake_fraction, "Fraction of videos labeled fake")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  scene->add_flag("--no-audio", s.scene.no_audio, "Do not write synthetic audio tracks");

  auto* emb = synth->add_subcommand("embeddings", "Draw class-conditional Gaussian clip embeddings");
  add_common(emb, s);
  emb->add_option("--videos", s.embed.spec.num_videos, "Number of videos")->check(CLI::PositiveNumber)->capture_default_str();
  emb->add_option("--clips-per-video", s.embed.spec.clips_per_video, "Clips per video")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  emb->add_option("--dim-v", s.embed.spec.dim_v, "Visual embedding width")->check(CLI::PositiveNumber)->capture_default_str();
  emb->add_option("--dim-a", s.embed.spec.dim_a, "Audio embedding width, 0 for video-only")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  emb->add_option("--separation", s.embed.spec.separation, "Class-mean distance in noise sigmas")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  emb->add_option("--fake-fraction", s.embed.spec.fake_fraction, "Fraction of videos labeled fake")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  emb->add_option("--clip-index", s.embed.clip_index, "Embed the clips listed in this clips directory instead")
      ->check(CLI::ExistingDirectory);

  // track --------------------------------------------------------------------
  auto* track = app.add_subcommand("track", "Build, smooth and align face tracks per video");
  add_common(track, s);
  track->add_option("--manifest", s.track.manifest, "Video manifest JSONL")->required()->check(CLI::ExistingFile);
  track->add_option("--detections", s.track.detections, "Directory with <video_id>.jsonl or <video_id>/detections.jsonl")
      ->required()
      ->check(CLI::ExistingDirectory);
  track->add_option("--reference-face", s.track.reference_face, "JSON file with the 5-point alignment template")
      ->check(CLI::ExistingFile);
  track->add_option("--aligned-size", s.track.aligned_size, "Side of the aligned face crops")
      ->check(CLI::Range(8, 1024))
      ->capture_default_str();
  track->add_option("--multi-face", s.track.multi_face, "Multi-face mode")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
  track->add_option("--confidence-threshold", cfg.tracking.confidence_threshold, "Minimum detection confidence")
      ->capture_default_str();
  track->add_option("--enlarge-factor", cfg.tracking.enlarge_factor, "Bounding-box enlargement factor")
      ->capture_default_str();
  track->add_option("--smooth-window", cfg.tracking.smooth_window, "Odd landmark smoothing window")
      ->capture_default_str();

  // clips --------------------------------------------------------------------
  auto* clips = app.add_subcommand("clips", "Cut 32-frame clips with aligned audio windows");
  add_common(clips, s);
  clips->add_option("--manifest", s.clips.manifest, "Video manifest JSONL")->required()->check(CLI::ExistingFile);
  clips->add_option("--tracks", s.clips.tracks, "Output directory of the track command")
      ->required()
      ->check(CLI::ExistingDirectory);
  clips->add_option("--mode", s.clips.mode, "train: random starts, infer: evenly spaced starts")
      ->check(CLI::IsMember({"train", "infer"}))
      ->capture_default_str();
  clips->add_option("--clips", s.clips.clips, "Clips per track (0: config default for the mode)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_time_base(clips, s.clips.fps, cfg.sampling.time_base.sample_rate);

  // augment ------------------------------------------------------------------
  auto* aug = app.add_subcommand("augment", "Apply per-clip training augmentations");
  add_common(aug, s);
  aug->add_option("--clips", s.augment.clips, "Clips directory")->required()->check(CLI::ExistingDirectory);
  aug->add_option("--p-flip", cfg.augment.p_flip, "Horizontal flip probability")->capture_default_str();
  aug->add_option("--hue-max-delta", cfg.augment.hue_max_delta, "Maximum hue shift")->capture_default_str();
  aug->add_option("--brightness-max-delta", cfg.augment.brightness_max_delta, "Maximum brightness shift")
      ->capture_default_str();
  aug->add_option("--scale-lo", cfg.augment.scale_lo, "Lower zoom factor of scale jitter")->capture_default_str();
  aug->add_option("--scale-hi", cfg.augment.scale_hi, "Upper zoom factor of scale jitter")->capture_default_str();

  // loss-eval ----------------------------------------------------------------
  auto* loss = app.add_subcommand("loss-eval", "Evaluate the contrastive objective on an embedding set");
  add_common(loss, s, false);
  loss->add_option("--out", s.common.out, "Optional JSON report path");
  loss->add_option("--embeddings", s.loss.embeddings, "Embedding set directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  loss->add_option("--text", s.loss.text, "Text candidates tensor [N, P, d] aligned with the embedding rows")
      ->check(CLI::ExistingFile);
  loss->add_option("--batch-size", s.loss.batch_size, "Videos per contrastive batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  loss->add_option("--tau", cfg.losses.tau, "Softmax temperature")->capture_default_str();
  loss->add_option("--lambda-va", cfg.losses.lambda_va, "Weight of the visual-audio term")->capture_default_str();
  loss->add_option("--lambda-vt", cfg.losses.lambda_vt, "Weight of the visual-text term")->capture_default_str();
  loss->add_option("--negatives", s.loss.negatives, "Negative set per anchor")
      ->check(CLI::IsMember({"symmetric", "one_sided"}))
      ->capture_default_str();
  loss->add_flag("--raw-dot", s.loss.raw_dot, "Use raw dot products instead of L2-normalizing inside the loss");
  loss->add_option("--batch-spec", s.loss.batch_spec, "JSON {\"batches\": [[row, ...], ...]} fixing the batches")
      ->check(CLI::ExistingFile);
  loss->add_option("--dump-gradients", s.loss.dump_gradients, "Directory for per-batch gradient tensors");

  // train-head ---------------------------------------------------------------
  auto* train = app.add_subcommand("train-head", "Train the MLP classification head");
  add_common(train, s);
  train->add_option("--embeddings", s.train.embeddings, "Labeled embedding set directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--epochs", cfg.head.epochs, "Training epochs")->capture_default_str();
  train->add_option("--batch-size", cfg.head.batch_size, "Examples per update")->capture_default_str();
  train->add_option("--lr0", cfg.head.lr0, "Initial learning rate")->capture_default_str();
  train->add_option("--alpha", cfg.head.alpha, "Final learning rate as a fraction of lr0")->capture_default_str();
  train->add_option("--hidden1", cfg.head.hidden1, "Width of the first hidden layer")->capture_default_str();
  train->add_option("--hidden2", cfg.head.hidden2, "Width of the second hidden layer")->capture_default_str();
  train->add_flag("--linear-probe", cfg.head.linear_probe, "Train only the output layer");
  train->add_flag("--no-balance", s.train.no_balance, "Disable minority-class oversampling");

  // score --------------------------------------------------------------------
  auto* score = app.add_subcommand("score", "Score every clip embedding with a trained head");
  add_common(score, s);
  score->add_option("--embeddings,--clips", s.score.embeddings, "Embedding set directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  score->add_option("--head", s.score.head, "Head bundle directory")->required()->check(CLI::ExistingDirectory);

  // eval ---------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Video-level ROC-AUC and accuracy from clip scores");
  add_common(ev, s, false);
  ev->add_option("--out", s.common.out, "Optional JSON report path");
  ev->add_option("--scores", s.eval.scores, "Score CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--manifest", s.eval.manifest, "Video manifest JSONL")->required()->check(CLI::ExistingFile);
  ev->add_option("--exclude-tag", cfg.eval.exclude_tags, "Drop videos carrying this manifest tag (repeatable)");
  ev->add_option("--threshold", cfg.eval.threshold, "Decision threshold for accuracy")->capture_default_str();

  // enrich-plan --------------------------------------------------------------
  auto* en = app.add_subcommand("enrich-plan", "Plan and cut origin audio for manipulated videos");
  add_common(en, s);
  en->add_option("--spec", s.enrich.spec, "Enrichment spec JSONL")->required()->check(CLI::ExistingFile);
  en->add_option("--audio-dir", s.enrich.audio_dir, "Directory holding <origin_id>.ft audio streams")
      ->capture_default_str();
  add_time_base(en, s.enrich.fps, cfg.enrichment.time_base.sample_rate);
}

// Scans argv for --config so the file can seed the defaults before parsing.
fs::path find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) return args[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("forgepipe");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FORGEPIPE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept the literal "off".
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

int report(Errc code, const std::string& message) {
  nlohmann::ordered_json doc;
  doc["error"] = errc_name(code);
  doc["message"] = message;
  std::cerr << doc.dump() << "\n";
  return 1;
}

}  // namespace

std::unique_ptr<CLI::App> make_app(State& state) {
  auto app = std::make_unique<CLI::App>("forgepipe: face-track, clip and score pipeline for video forgery detection",
                                        "forgepipe");
  build(*app, state);
  return app;
}

int run(const std::vector<std::string>& args) {
  if (!spdlog::get("forgepipe")) configure_logging();

  State state;
  state.common.jobs = std::max(1u, std::thread::hardware_concurrency());
  try {
    if (const fs::path cfg_path = find_config(args); !cfg_path.empty()) {
      state.cfg = load_pipeline_config(cfg_path);
    }
  } catch (const Error& e) {
    return report(e.code(), e.what());
  } catch (const std::exception& e) {
    return report(Errc::IoError, e.what());
  }

  auto app = make_app(state);
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app->parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app->get_subcommands().front();
  CLI::App* leaf = sub;
  if (!sub->get_subcommands().empty()) leaf = sub->get_subcommands().front();

  try {
    PipelineConfig& cfg = state.cfg;
    if (leaf->count("--seed") > 0) {
      cfg.augment.seed = state.common.seed;
      cfg.head.seed = state.common.seed;
    }
    if (sub->get_name() == "clips") cfg.sampling.time_base.fps = Rational::parse(state.clips.fps);
    if (sub->get_name() == "enrich-plan") {
      cfg.enrichment.time_base.fps = Rational::parse(state.enrich.fps);
      cfg.enrichment.audio_dir = state.enrich.audio_dir;
    }
    if (sub->get_name() == "loss-eval") {
      cfg.losses.negatives = state.loss.negatives == "one_sided" ? NegativeMode::OneSided : NegativeMode::Symmetric;
      if (state.loss.raw_dot) cfg.losses.normalize_inputs = false;
    }
    if (sub->get_name() == "train-head" && state.train.no_balance) cfg.head.balance_classes = false;
    if (sub->get_name() == "track") {
      if (state.track.multi_face == "on") cfg.tracking.multi_face = true;
      if (state.track.multi_face == "off") cfg.tracking.multi_face = false;
    }
    validate(cfg);

    const std::string name = sub->get_name();
    spdlog::info("running {}", name);
    if (name == "synth") {
      if (leaf->get_name() == "scene") cmd_synth_scene(state);
      else cmd_synth_embeddings(state);
    } else if (name == "track") {
      cmd_track(state);
    } else if (name == "clips") {
      cmd_clips(state);
    } else if (name == "augment") {
      cmd_augment(state);
    } else if (name == "loss-eval") {
      cmd_loss_eval(state);
    } else if (name == "train-head") {
      cmd_train_head(state);
    } else if (name == "score") {
      cmd_score(state);
    } else if (name == "eval") {
      cmd_eval(state);
    } else if (name == "enrich-plan") {
      cmd_enrich_plan(state);
    }
  } catch (const Error& e) {
    return report(e.code(), e.what());
  } catch (const std::exception& e) {
    return report(Errc::IoError, e.what());
  }
  return 0;
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace forgepipe::cli
