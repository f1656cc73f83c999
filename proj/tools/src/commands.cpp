#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "forgepipe/dataio.hpp"
#include "forgepipe/enrichment.hpp"
#include "forgepipe/error.hpp"
#include "forgepipe/evalmetrics.hpp"
#include "forgepipe/geometry.hpp"
#include "forgepipe/head.hpp"
#include "forgepipe/losses.hpp"
#include "forgepipe/rng.hpp"
#include "forgepipe/synth.hpp"
#include "forgepipe/tracking.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace forgepipe::cli {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr std::uint64_t kLabelStream = 0x4c41424c;  // "LABL"
constexpr std::uint64_t kClipStream = 0x434c4950;   // "CLIP"
constexpr std::uint64_t kBatchStream = 0x42415443;  // "BATC"

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

void write_json(const fs::path& path, const ojson& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

void print_json(const ojson& doc) { std::cout << doc.dump() << std::endl; }

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

std::string video_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "vid%05zu", i);
  return buf;
}

Tensor frames_tensor(const std::vector<Image>& frames) {
  if (frames.empty()) throw Error(Errc::EmptyFrame, "no frames to write");
  Tensor t;
  const Image& f0 = frames.front();
  t.dims = {frames.size(), static_cast<std::uint64_t>(f0.height), static_cast<std::uint64_t>(f0.width), 3};
  t.data.reserve(frames.size() * f0.pixels.size());
  for (const auto& f : frames) t.data.insert(t.data.end(), f.pixels.begin(), f.pixels.end());
  return t;
}

ojson points_json(const LandmarkSet5& pts) {
  ojson a = ojson::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

// --- clip index ---------------------------------------------------------------

struct ClipEntry {
  ClipKey key;
  std::int64_t start_frame = 0;
  fs::path frames;
  std::optional<fs::path> audio;
  int label = kUnknownLabel;
};

std::vector<ClipEntry> read_clip_index(const fs::path& dir) {
  std::vector<ClipEntry> out;
  const std::string text = read_file(dir / "index.jsonl");
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json doc = json::parse(line);
      ClipEntry e;
      e.key.video_id = doc.at("video_id").get<std::string>();
      e.key.track_id = doc.at("track_id").get<std::int64_t>();
      e.key.clip_index = doc.at("clip_index").get<std::int64_t>();
      e.start_frame = doc.at("start_frame").get<std::int64_t>();
      e.frames = doc.at("frames").get<std::string>();
      if (auto it = doc.find("audio"); it != doc.end() && !it->is_null()) e.audio = it->get<std::string>();
      e.label = doc.value("label", kUnknownLabel);
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::string format_clip_entry(const ClipEntry& e) {
  ojson doc;
  doc["video_id"] = e.key.video_id;
  doc["track_id"] = e.key.track_id;
  doc["clip_index"] = e.key.clip_index;
  doc["start_frame"] = e.start_frame;
  doc["frames"] = e.frames.generic_string();
  doc["audio"] = e.audio ? ojson(e.audio->generic_string()) : ojson(nullptr);
  doc["label"] = e.label;
  return doc.dump();
}

void write_clip_index(const fs::path& dir, const std::vector<ClipEntry>& entries) {
  std::string text;
  for (const auto& e : entries) text += format_clip_entry(e) + "\n";
  write_file_atomic(dir / "index.jsonl", text);
}

fs::path clip_stem(const ClipKey& key) {
  return fs::path(key.video_id) /
         ("t" + std::to_string(key.track_id) + "_c" + std::to_string(key.clip_index));
}

// --- tracks.json ----------------------------------------------------------------

struct StoredTrack {
  std::int64_t track_id = 0;
  std::int64_t first_frame = 0;
  fs::path aligned;
};

std::vector<StoredTrack> read_tracks_json(const fs::path& path) {
  const json doc = parse_json_file(path);
  std::vector<StoredTrack> out;
  try {
    for (const auto& t : doc.at("tracks")) {
      StoredTrack s;
      s.track_id = t.at("track_id").get<std::int64_t>();
      s.first_frame = t.at("first_frame").get<std::int64_t>();
      s.aligned = t.at("aligned").get<std::string>();
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  return out;
}

// Video-level verdicts using the labels stored with the embedding rows.
std::vector<VideoVerdict> verdicts_from_rows(const EmbeddingSet& set, const std::vector<double>& scores) {
  std::map<std::string, std::vector<ScoreRecord>> by_video;
  std::map<std::string, int> labels;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] == kUnknownLabel) continue;
    const ClipKey& k = set.keys[i];
    by_video[k.video_id].push_back({k.video_id, k.track_id, k.clip_index, static_cast<float>(scores[i])});
    labels[k.video_id] = set.labels[i];
  }
  std::vector<VideoVerdict> out;
  for (const auto& [id, records] : by_video) {
    VideoVerdict v = aggregate_video(records);
    v.label = labels[id];
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> score_rows(const HeadParams& head, const EmbeddingSet& set, std::size_t jobs) {
  std::vector<double> scores(set.size());
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (set.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t end = std::min(set.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) scores[i] = forward(head, embedding_row(set, i)).score;
  });
  return scores;
}

}  // namespace

// --- synth ----------------------------------------------------------------------

void cmd_synth_scene(const State& s) {
  const auto& o = s.scene;
  const fs::path out = s.common.out;
  fs::create_directories(out);
  const auto n = static_cast<std::size_t>(o.videos);

  std::vector<int> labels(n, 0);
  const auto n_fake = static_cast<std::size_t>(std::llround(o.fake_fraction * static_cast<double>(n)));
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_fake), 1);
  Rng rng = Rng::keyed(s.common.seed, kLabelStream);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(labels[i - 1], labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
  }

  static constexpr ManipulationKind kKinds[] = {ManipulationKind::Deepfake, ManipulationKind::FaceSwap,
                                                ManipulationKind::Face2Face, ManipulationKind::NeuralTextures};
  std::vector<VideoManifestEntry> manifest(n);
  std::size_t fake_seen = 0;
  const TimeBase tb;
  for (std::size_t i = 0; i < n; ++i) {
    VideoManifestEntry& e = manifest[i];
    e.video_id = video_name(i);
    e.label = labels[i] ? Label::Fake : Label::Real;
    if (labels[i]) e.manipulation.kind = kKinds[fake_seen++ % 4];
    e.frames_uri = fs::path(e.video_id) / "frames.ft";
    if (!o.no_audio) e.audio_uri = fs::path(e.video_id) / "audio.ft";
    e.fps = tb.fps;
    e.sample_rate = tb.sample_rate;
    e.num_frames = o.frames;
  }

  parallel_for(n, s.common.jobs, [&](std::size_t i) {
    RandomSceneOptions ro;
    ro.persons = o.persons;
    ro.distractors = o.distractors;
    ro.dropout = o.dropout;
    ro.num_frames = o.frames;
    ro.width = o.width;
    ro.height = o.height;
    const SceneSpec spec = random_scene_spec(ro, mix_key(s.common.seed, i));
    const Scene scene = generate_scene(spec);
    const fs::path dir = out / manifest[i].video_id;
    write_detections(dir / "detections.jsonl", scene.detections);
    write_tensor(dir / "frames.ft", render_frames(spec));
    write_file_atomic(dir / "truth.json", format_truth_json(scene.truth) + "\n");
    if (!o.no_audio) {
      const auto samples = static_cast<std::size_t>(frame_to_sample(o.frames, tb));
      std::vector<float> audio(samples);
      const double freq = 220.0 + 20.0 * static_cast<double>(i % 16);
      for (std::size_t k = 0; k < samples; ++k) {
        audio[k] = static_cast<float>(0.25 * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(k) /
                                                      static_cast<double>(tb.sample_rate)));
      }
      const std::uint64_t dims[] = {samples};
      write_tensor(dir / "audio.ft", dims, audio);
    }
  });
  write_manifest(out / "manifest.jsonl", manifest);

  ojson summary;
  summary["videos"] = n;
  summary["fake"] = n_fake;
  summary["manifest"] = (out / "manifest.jsonl").generic_string();
  print_json(summary);
}

void cmd_synth_embeddings(const State& s) {
  EmbeddingDatasetSpec spec = s.embed.spec;
  spec.seed = s.common.seed;
  const fs::path out = s.common.out;
  ojson summary;
  if (s.embed.clip_index.empty()) {
    const SyntheticEmbeddings data = generate_embeddings(spec);
    write_embedding_set(out, data.set);
    write_manifest(out / "manifest.jsonl", data.manifest);
    summary["rows"] = data.set.size();
    summary["videos"] = data.manifest.size();
  } else {
    const auto clips = read_clip_index(s.embed.clip_index);
    std::vector<ClipKey> keys;
    std::vector<int> labels;
    for (const auto& c : clips) {
      if (c.label != 0 && c.label != 1) {
        throw Error(Errc::InvariantError, c.key.video_id + ": clip index entry without a label");
      }
      keys.push_back(c.key);
      labels.push_back(c.label);
    }
    const EmbeddingSet set = embed_clips(keys, labels, spec);
    write_embedding_set(out, set);
    summary["rows"] = set.size();
  }
  summary["dim_v"] = spec.dim_v;
  summary["dim_a"] = spec.dim_a;
  print_json(summary);
}

// --- track ------------------------------------------------------------------------

void cmd_track(const State& s) {
  const auto manifest = read_manifest(s.track.manifest);
  const fs::path base = s.track.manifest.parent_path();
  const fs::path out = s.common.out;
  const LandmarkSet5 reference =
      s.track.reference_face.empty() ? default_reference_face() : load_reference_face(s.track.reference_face);
  const TrackerConfig& tcfg = s.cfg.tracking;

  std::vector<std::size_t> track_counts(manifest.size());
  parallel_for(manifest.size(), s.common.jobs, [&](std::size_t i) {
    const VideoManifestEntry& entry = manifest[i];
    fs::path det_path = s.track.detections / (entry.video_id + ".jsonl");
    if (!fs::exists(det_path)) det_path = s.track.detections / entry.video_id / "detections.jsonl";
    const DetectionMap dets = read_detections(det_path);
    const bool multi = tcfg.multi_face.value_or(detect_multi_face(dets, tcfg));
    const auto tracks = build_tracks(dets, entry.num_frames, tcfg);

    const auto frames = frames_from_tensor(read_tensor(resolve(base, entry.frames_uri)));
    if (static_cast<std::int64_t>(frames.size()) < entry.num_frames) {
      throw Error(Errc::DimensionMismatch, entry.video_id + ": frame tensor is shorter than num_frames");
    }
    const FrameSource source = [&](std::int64_t f) { return frames[static_cast<std::size_t>(f)]; };

    const fs::path dir = out / entry.video_id;
    ojson doc;
    doc["video_id"] = entry.video_id;
    doc["num_frames"] = entry.num_frames;
    doc["multi_face"] = multi;
    doc["aligned_size"] = s.track.aligned_size;
    doc["tracks"] = ojson::array();
    for (const auto& track : tracks) {
      const std::string aligned_name = "track_" + std::to_string(track.track_id) + ".ft";
      write_tensor(dir / aligned_name, frames_tensor(align_track(track, source, reference, s.track.aligned_size)));
      ojson t;
      t["track_id"] = track.track_id;
      t["first_frame"] = track.first_frame();
      t["last_frame"] = track.last_frame();
      t["aligned"] = aligned_name;
      std::string mask;
      for (const auto& p : track.points) mask += p.provenance == Provenance::Detected ? 'D' : 'I';
      t["provenance_mask"] = mask;
      t["points"] = ojson::array();
      for (const auto& p : track.points) {
        ojson jp;
        jp["frame_index"] = p.frame_index;
        jp["provenance"] = p.provenance == Provenance::Detected ? "detected" : "interpolated";
        jp["bbox"] = {p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h};
        jp["landmarks"] = points_json(p.landmarks);
        jp["smoothed_landmarks"] = points_json(p.smoothed_landmarks);
        t["points"].push_back(std::move(jp));
      }
      doc["tracks"].push_back(std::move(t));
    }
    write_json(dir / "tracks.json", doc);
    track_counts[i] = tracks.size();
    spdlog::info("{}: {} track(s)", entry.video_id, tracks.size());
  });

  ojson summary;
  summary["videos"] = manifest.size();
  summary["tracks"] = std::accumulate(track_counts.begin(), track_counts.end(), std::size_t{0});
  print_json(summary);
}

// --- clips ------------------------------------------------------------------------

void cmd_clips(const State& s) {
  const auto manifest = read_manifest(s.clips.manifest);
  const fs::path base = s.clips.manifest.parent_path();
  const fs::path out = s.common.out;
  const TimeBase& tb = s.cfg.sampling.time_base;
  const bool train = s.clips.mode == "train";
  const std::int64_t n_clips =
      s.clips.clips > 0 ? s.clips.clips : (train ? s.cfg.sampling.train_clips : s.cfg.sampling.inference_clips);

  std::vector<std::vector<ClipEntry>> per_video(manifest.size());
  parallel_for(manifest.size(), s.common.jobs, [&](std::size_t i) {
    const VideoManifestEntry& entry = manifest[i];
    const fs::path tdir = s.clips.tracks / entry.video_id;
    const auto tracks = read_tracks_json(tdir / "tracks.json");

    std::optional<std::vector<float>> audio;
    if (entry.audio_uri) {
      Tensor a = read_tensor(resolve(base, *entry.audio_uri));
      if (a.dims.size() != 1) throw Error(Errc::DimensionMismatch, entry.video_id + ": audio tensor must be 1-D");
      audio = entry.sample_rate == tb.sample_rate ? std::move(a.data)
                                                  : resample_audio(a.data, entry.sample_rate, tb.sample_rate);
    }

    for (const auto& st : tracks) {
      std::vector<Image> frames = frames_from_tensor(read_tensor(tdir / st.aligned));
      std::int64_t first = st.first_frame;
      if (!(entry.fps == tb.fps)) {
        const auto idx = resample_frame_indices(static_cast<std::int64_t>(frames.size()), entry.fps, tb.fps);
        std::vector<Image> resampled;
        resampled.reserve(idx.size());
        for (auto k : idx) resampled.push_back(frames[static_cast<std::size_t>(k)]);
        frames = std::move(resampled);
        first = static_cast<std::int64_t>(std::floor(static_cast<double>(first) * tb.fps.value() / entry.fps.value()));
      }
      const auto len = static_cast<std::int64_t>(frames.size());
      std::vector<std::int64_t> starts;
      if (train) {
        if (len < kClipFrames) {
          spdlog::warn("{} track {}: {} frames, too short for training clips", entry.video_id, st.track_id, len);
          continue;
        }
        starts = sample_train_clips(len, n_clips,
                                    mix_key(s.common.seed, kClipStream, stable_hash(entry.video_id),
                                            static_cast<std::uint64_t>(st.track_id)));
      } else {
        starts = place_inference_clips(len, n_clips);
      }
      for (std::size_t j = 0; j < starts.size(); ++j) {
        std::optional<std::span<const float>> audio_span;
        if (audio) audio_span = std::span<const float>(*audio);
        Clip clip = cut_clip(frames, first, audio_span, starts[j], tb);
        ClipEntry e;
        e.key = {entry.video_id, st.track_id, static_cast<std::int64_t>(j)};
        e.start_frame = starts[j];
        e.label = entry.label == Label::Fake ? 1 : 0;
        const fs::path stem = clip_stem(e.key);
        e.frames = stem.string() + ".frames.ft";
        write_tensor(out / e.frames, clip_frames_tensor(clip));
        if (clip.audio) {
          e.audio = stem.string() + ".audio.ft";
          const std::uint64_t dims[] = {clip.audio->size()};
          write_tensor(out / *e.audio, dims, *clip.audio);
        }
        per_video[i].push_back(std::move(e));
      }
    }
  });

  std::vector<ClipEntry> all;
  for (auto& v : per_video) std::move(v.begin(), v.end(), std::back_inserter(all));
  fs::create_directories(out);
  write_clip_index(out, all);
  ojson summary;
  summary["videos"] = manifest.size();
  summary["clips"] = all.size();
  summary["mode"] = s.clips.mode;
  print_json(summary);
}

// --- augment ----------------------------------------------------------------------

void cmd_augment(const State& s) {
  const auto clips = read_clip_index(s.augment.clips);
  const fs::path out = s.common.out;
  const AugmentConfig& acfg = s.cfg.augment;
  std::vector<AugmentParams> drawn(clips.size());

  parallel_for(clips.size(), s.common.jobs, [&](std::size_t i) {
    const ClipEntry& e = clips[i];
    Clip clip;
    clip.video_id = e.key.video_id;
    clip.track_id = e.key.track_id;
    clip.clip_index = e.key.clip_index;
    clip.start_frame = e.start_frame;
    clip.frames = frames_from_tensor(read_tensor(s.augment.clips / e.frames));
    Rng rng = Rng::keyed(acfg.seed, stable_hash(e.key.video_id), static_cast<std::uint64_t>(e.key.track_id),
                         static_cast<std::uint64_t>(e.key.clip_index));
    drawn[i] = draw_augment_params(acfg, rng);
    const Clip augmented = augment_clip(clip, drawn[i]);
    write_tensor(out / e.frames, clip_frames_tensor(augmented));
    if (e.audio) {
      // Audio passes through unchanged.
      write_file_atomic(out / *e.audio, read_file(s.augment.clips / *e.audio));
    }
  });

  fs::create_directories(out);
  write_clip_index(out, clips);
  std::string params;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    ojson p;
    p["video_id"] = clips[i].key.video_id;
    p["track_id"] = clips[i].key.track_id;
    p["clip_index"] = clips[i].key.clip_index;
    p["flip"] = drawn[i].flip;
    p["hue_delta"] = drawn[i].hue_delta;
    p["brightness_delta"] = drawn[i].brightness_delta;
    p["scale"] = drawn[i].scale;
    params += p.dump() + "\n";
  }
  write_file_atomic(out / "augment_params.jsonl", params);
  ojson summary;
  summary["clips"] = clips.size();
  print_json(summary);
}

// --- loss-eval --------------------------------------------------------------------

void cmd_loss_eval(const State& s) {
  const EmbeddingSet set = read_embedding_set(s.loss.embeddings);
  if (!set.audio) throw Error(Errc::WrongModality, "loss-eval needs audio embeddings");
  if (set.dim_v() != set.dim_a()) {
    throw Error(Errc::DimensionMismatch, "visual and audio widths differ; the identity projection needs equal widths");
  }
  std::optional<Tensor> text;
  if (!s.loss.text.empty()) {
    text = read_tensor(s.loss.text);
    if (text->dims.size() != 3 || text->dims[0] != set.size() || text->dims[2] != set.dim_v()) {
      throw Error(Errc::DimensionMismatch, "text tensor must be [rows, candidates, dim_v]");
    }
  }

  const std::size_t d = set.dim_v();
  const ProjectionHead va = ProjectionHead::identity(d, SharedSpace::VA, true);
  const ProjectionHead vat = ProjectionHead::identity(d, SharedSpace::VAT, true);
  auto row_embedding = [](std::span<const float> row, Modality m) {
    return ModalityEmbedding{m, std::vector<float>(row.begin(), row.end())};
  };

  std::vector<std::vector<std::size_t>> batches;
  if (!s.loss.batch_spec.empty()) {
    const json spec = parse_json_file(s.loss.batch_spec);
    try {
      batches = spec.at("batches").get<std::vector<std::vector<std::size_t>>>();
    } catch (const json::exception& e) {
      throw ParseError(0, s.loss.batch_spec.string() + ": " + e.what());
    }
    for (const auto& b : batches) {
      if (b.empty()) throw Error(Errc::InvariantError, "batch spec contains an empty batch");
      for (auto row : b) {
        if (row >= set.size()) throw Error(Errc::InvariantError, "batch spec row out of range");
      }
    }
  } else {
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::keyed(s.common.seed, kBatchStream);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    }
    const std::size_t k = s.loss.batch_size;
    for (std::size_t start = 0; start < order.size(); start += k) {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + k)));
    }
  }

  std::vector<CombinedLoss> results(batches.size());
  parallel_for(batches.size(), s.common.jobs, [&](std::size_t b) {
    ContrastiveBatch batch;
    for (const std::size_t row : batches[b]) {
      ContrastiveEntry e;
      e.visual_va = project(va, row_embedding(set.visual_row(row), Modality::Visual)).vector;
      e.audio_va = project(va, row_embedding(set.audio_row(row), Modality::Audio)).vector;
      if (text) {
        e.visual_vat = project(vat, row_embedding(set.visual_row(row), Modality::Visual)).vector;
        const std::size_t p = text->dims[1];
        for (std::size_t c = 0; c < p; ++c) {
          std::span<const float> t(text->data.data() + (row * p + c) * d, d);
          e.text.push_back(project(vat, row_embedding(t, Modality::Text)).vector);
        }
      }
      batch.entries.push_back(std::move(e));
    }
    results[b] = combined_loss(batch, s.cfg.losses);
    if (!s.loss.dump_gradients.empty()) {
      const auto& g = results[b].gradient.entries;
      auto dump = [&](const std::string& name, auto&& pick) {
        Tensor t;
        t.dims = {g.size(), d};
        for (const auto& e : g) {
          const Vec& v = pick(e);
          t.data.insert(t.data.end(), v.begin(), v.end());
        }
        write_tensor(s.loss.dump_gradients / ("batch" + std::to_string(b) + "_" + name + ".ft"), t);
      };
      dump("visual_va", [](const ContrastiveEntry& e) -> const Vec& { return e.visual_va; });
      dump("audio_va", [](const ContrastiveEntry& e) -> const Vec& { return e.audio_va; });
      if (text) dump("visual_vat", [](const ContrastiveEntry& e) -> const Vec& { return e.visual_vat; });
    }
  });

  double loss = 0.0, nce = 0.0, mil = 0.0, grad_sq = 0.0;
  for (const auto& r : results) {
    loss += r.loss;
    nce += r.nce_va;
    mil += r.milnce_vt;
    for (const auto& e : r.gradient.entries) {
      grad_sq += dot(e.visual_va, e.visual_va) + dot(e.audio_va, e.audio_va) + dot(e.visual_vat, e.visual_vat);
      for (const auto& t : e.text) grad_sq += dot(t, t);
    }
  }
  const auto nb = static_cast<double>(batches.size());
  ojson report;
  report["batches"] = batches.size();
  report["tau"] = s.cfg.losses.tau;
  report["loss"] = loss / nb;
  report["nce_va"] = nce / nb;
  report["milnce_vt"] = mil / nb;
  report["grad_norm"] = std::sqrt(grad_sq);
  if (!s.common.out.empty()) write_json(s.common.out, report);
  print_json(report);
}

// --- train-head / score -----------------------------------------------------------

void cmd_train_head(const State& s) {
  const EmbeddingSet set = read_embedding_set(s.train.embeddings);
  const auto examples = examples_from_embeddings(set);
  const TrainResult result = train_head(examples, s.cfg.head);
  save_head(s.common.out, result.params);

  const auto scores = score_rows(result.params, set, s.common.jobs);
  const auto verdicts = verdicts_from_rows(set, scores);
  ojson log;
  log["examples"] = examples.size();
  log["updates"] = result.lr_trace.size();
  log["lr_first"] = result.lr_trace.front();
  log["lr_last"] = result.lr_trace.back();
  log["final_loss"] = result.final_loss;
  log["training_auc"] = roc_auc(verdicts);
  log["epoch_loss"] = result.epoch_loss;
  print_json(log);
  log["lr_trace"] = result.lr_trace;
  write_json(s.common.out / "train_log.json", log);
}

void cmd_score(const State& s) {
  const EmbeddingSet set = read_embedding_set(s.score.embeddings);
  const HeadParams head = load_head(s.score.head);
  const auto scores = score_rows(head, set, s.common.jobs);
  std::vector<ScoreRecord> records(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    records[i] = {set.keys[i].video_id, set.keys[i].track_id, set.keys[i].clip_index, static_cast<float>(scores[i])};
  }
  std::sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.video_id, a.track_id, a.clip_index) < std::tie(b.video_id, b.track_id, b.clip_index);
  });
  write_scores_csv(s.common.out, records);
  ojson summary;
  summary["clips"] = records.size();
  print_json(summary);
}

// --- eval -------------------------------------------------------------------------

void cmd_eval(const State& s) {
  const auto scores = read_scores_csv(s.eval.scores);
  const auto manifest = read_manifest(s.eval.manifest);
  const auto verdicts = aggregate_videos(scores, manifest);
  const auto& tags = s.cfg.eval.exclude_tags;
  const auto kept = tags.empty() ? verdicts : filter_category(verdicts, manifest, has_any_tag(tags));

  ojson report;
  report["auc"] = roc_auc(kept);
  report["accuracy"] = accuracy(kept, s.cfg.eval.threshold);
  report["n_videos"] = kept.size();
  report["n_excluded"] = verdicts.size() - kept.size();
  if (!s.common.out.empty()) write_json(s.common.out, report);
  print_json(report);
}

// --- enrich-plan ------------------------------------------------------------------

void cmd_enrich_plan(const State& s) {
  const auto specs = read_enrichment_specs(s.enrich.spec);
  const fs::path base = s.enrich.spec.parent_path();
  const fs::path audio_dir = s.cfg.enrichment.audio_dir;
  const fs::path out = s.common.out;
  const TimeBase& tb = s.cfg.enrichment.time_base;

  const AudioLookup lookup = [&](const EnrichmentSpec& spec,
                                 const std::string& origin_id) -> std::optional<std::vector<float>> {
    fs::path path;
    if (spec.origin_audio_uri) {
      path = resolve(base, *spec.origin_audio_uri);
    } else if (!audio_dir.empty()) {
      path = audio_dir / (origin_id + ".ft");
    }
    if (path.empty() || !fs::exists(path)) return std::nullopt;
    Tensor t = read_tensor(path);
    if (t.dims.size() != 1) throw Error(Errc::DimensionMismatch, path.string() + ": audio stream must be 1-D");
    return std::move(t.data);
  };

  std::vector<EnrichmentRecord> records(specs.size());
  parallel_for(specs.size(), s.common.jobs, [&](std::size_t i) {
    EnrichmentResult r = enrich(specs[i], tb, lookup);
    if (r.audio && !r.audio->samples.empty()) {
      const std::uint64_t dims[] = {r.audio->samples.size()};
      write_tensor(out / "audio" / (r.record.video_id + ".ft"), dims, r.audio->samples);
    }
    records[i] = std::move(r.record);
  });

  std::string lines;
  for (const auto& r : records) lines += format_enrichment_record(r) + "\n";
  write_file_atomic(out / "enriched.jsonl", lines);
  const std::string ledger = format_ledger_json(build_ledger(records));
  write_file_atomic(out / "ledger.json", ledger + "\n");
  std::cout << ledger << std::endl;
}

}  // namespace forgepipe::cli
