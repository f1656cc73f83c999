#include "forgepipe/dataio.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "forgepipe/error.hpp"
#include "json.hpp"

namespace forgepipe {

using nlohmann::json;

namespace {

std::int64_t parse_int(std::string_view text, std::string_view what) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(Errc::ParseError, "invalid integer for " + std::string(what) + ": '" +
                                      std::string(text) + "'");
  }
  return value;
}

[[noreturn]] void invariant(const std::string& message) {
  throw Error(Errc::InvariantError, message);
}

json parse_json_line(std::string_view line, std::size_t line_no) {
  try {
    json doc = json::parse(line);
    if (!doc.is_object()) throw ParseError(line_no, "expected a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
}

template <typename T>
T require(const json& doc, const char* key, std::size_t line_no) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(line_no, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(line_no, std::string("field '") + key + "': " + e.what());
  }
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

// --- Rational ---------------------------------------------------------------

Rational Rational::parse(std::string_view text) {
  Rational r;
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    r.num = parse_int(text, "fps");
    r.den = 1;
  } else {
    r.num = parse_int(text.substr(0, slash), "fps numerator");
    r.den = parse_int(text.substr(slash + 1), "fps denominator");
  }
  if (r.num <= 0 || r.den <= 0) invariant("fps must be positive: '" + std::string(text) + "'");
  return r;
}

std::string Rational::to_string() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

// --- Labels / manipulations ---------------------------------------------------

std::string_view label_name(Label label) noexcept {
  return label == Label::Real ? "Real" : "Fake";
}

Label parse_label(std::string_view name) {
  if (name == "Real") return Label::Real;
  if (name == "Fake") return Label::Fake;
  throw Error(Errc::ParseError, "unknown label '" + std::string(name) + "'");
}

Manipulation Manipulation::parse(std::string_view name) {
  if (name == "None") return {ManipulationKind::None, {}};
  if (name == "Deepfake") return {ManipulationKind::Deepfake, {}};
  if (name == "FaceSwap") return {ManipulationKind::FaceSwap, {}};
  if (name == "Face2Face") return {ManipulationKind::Face2Face, {}};
  if (name == "NeuralTextures") return {ManipulationKind::NeuralTextures, {}};
  return {ManipulationKind::Other, std::string(name)};
}

std::string Manipulation::name() const {
  switch (kind) {
    case ManipulationKind::None: return "None";
    case ManipulationKind::Deepfake: return "Deepfake";
    case ManipulationKind::FaceSwap: return "FaceSwap";
    case ManipulationKind::Face2Face: return "Face2Face";
    case ManipulationKind::NeuralTextures: return "NeuralTextures";
    case ManipulationKind::Other: return other;
  }
  return other;
}

// --- Manifest -----------------------------------------------------------------

void validate(const VideoManifestEntry& e) {
  if (e.video_id.empty()) invariant("video_id must be non-empty");
  if (e.fps.num <= 0 || e.fps.den <= 0) invariant(e.video_id + ": fps must be positive");
  if (e.sample_rate <= 0) invariant(e.video_id + ": sample_rate must be positive");
  if (e.num_frames < 1) invariant(e.video_id + ": num_frames must be >= 1");
  if (e.label == Label::Real && e.manipulation.kind != ManipulationKind::None) {
    invariant(e.video_id + ": a Real video cannot carry a manipulation");
  }
}

VideoManifestEntry parse_manifest_line(std::string_view line, std::size_t line_no) {
  const json doc = parse_json_line(line, line_no);
  VideoManifestEntry e;
  e.video_id = require<std::string>(doc, "video_id", line_no);
  e.label = parse_label(require<std::string>(doc, "label", line_no));
  e.manipulation = Manipulation::parse(require<std::string>(doc, "manipulation", line_no));
  e.frames_uri = require<std::string>(doc, "frames_uri", line_no);
  if (auto it = doc.find("audio_uri"); it != doc.end() && !it->is_null()) {
    e.audio_uri = it->get<std::string>();
  }
  const auto fps_it = doc.find("fps");
  if (fps_it == doc.end()) throw ParseError(line_no, "missing field 'fps'");
  if (fps_it->is_string()) {
    e.fps = Rational::parse(fps_it->get<std::string>());
  } else if (fps_it->is_number_integer()) {
    e.fps = {fps_it->get<std::int64_t>(), 1};
  } else {
    throw ParseError(line_no, "fps must be a \"num/den\" string");
  }
  e.sample_rate = require<std::int64_t>(doc, "sample_rate", line_no);
  e.num_frames = require<std::int64_t>(doc, "num_frames", line_no);
  if (auto it = doc.find("tags"); it != doc.end()) {
    e.tags = it->get<std::vector<std::string>>();
  }
  validate(e);
  return e;
}

std::string format_manifest_line(const VideoManifestEntry& e) {
  validate(e);
  json doc = {
      {"video_id", e.video_id},
      {"label", label_name(e.label)},
      {"manipulation", e.manipulation.name()},
      {"frames_uri", e.frames_uri.generic_string()},
      {"fps", e.fps.to_string()},
      {"sample_rate", e.sample_rate},
      {"num_frames", e.num_frames},
  };
  if (e.audio_uri) doc["audio_uri"] = e.audio_uri->generic_string();
  if (!e.tags.empty()) doc["tags"] = e.tags;
  return doc.dump();
}

std::vector<VideoManifestEntry> read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<VideoManifestEntry> entries;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    entries.push_back(parse_manifest_line(lines[i], i + 1));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const VideoManifestEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += format_manifest_line(e);
    out += '\n';
  }
  write_file_atomic(path, out);
}

// --- Tensors --------------------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t checked_product(std::span<const std::uint64_t> dims) {
  std::uint64_t total = 1;
  for (auto d : dims) {
    if (d == 0) invariant("tensor dims must all be >= 1");
    if (total > std::numeric_limits<std::uint64_t>::max() / d) {
      throw Error(Errc::DimOverflow, "tensor dims overflow");
    }
    total *= d;
  }
  return total;
}

}  // namespace

std::uint64_t Tensor::element_count() const { return checked_product(dims); }

std::string encode_tensor(const Tensor& tensor) {
  if (tensor.dims.empty()) invariant("tensor must have at least one dimension");
  const std::uint64_t count = checked_product(tensor.dims);
  if (count != tensor.data.size()) {
    throw Error(Errc::DimensionMismatch, "tensor payload length does not match dims");
  }
  std::string out;
  out.reserve(16 + 8 * tensor.dims.size() + 4 * tensor.data.size());
  out.append(kTensorMagic);
  put_u32(out, static_cast<std::uint32_t>(DType::F32));
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u64(out, d);
  if constexpr (std::endian::native == std::endian::little) {
    const auto offset = out.size();
    out.resize(offset + 4 * tensor.data.size());
    std::memcpy(out.data() + offset, tensor.data.data(), 4 * tensor.data.size());
  } else {
    for (float f : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < 16) throw Error(Errc::TruncatedPayload, "tensor header truncated");
  if (bytes.substr(0, 8) != kTensorMagic) throw Error(Errc::BadMagic, "not a FOTENSR1 tensor");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t dtype = get_u32(p + 8);
  if (dtype != static_cast<std::uint32_t>(DType::F32)) {
    invariant("unsupported tensor dtype " + std::to_string(dtype));
  }
  const std::uint64_t ndim = get_u32(p + 12);
  if (ndim == 0) invariant("tensor must have at least one dimension");
  if (bytes.size() < 16 + 8 * ndim) throw Error(Errc::TruncatedPayload, "tensor dims truncated");
  Tensor t;
  t.dims.resize(ndim);
  for (std::uint64_t i = 0; i < ndim; ++i) t.dims[i] = get_u64(p + 16 + 8 * i);
  const std::uint64_t count = checked_product(t.dims);
  if (count > std::numeric_limits<std::uint64_t>::max() / 4) {
    throw Error(Errc::DimOverflow, "tensor payload size overflows");
  }
  const std::uint64_t header = 16 + 8 * ndim;
  const std::uint64_t available = bytes.size() - header;
  if (available < 4 * count) throw Error(Errc::TruncatedPayload, "tensor payload truncated");
  if (available > 4 * count) invariant("tensor file has trailing bytes");
  t.data.resize(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(t.data.data(), p + header, 4 * count);
  } else {
    for (std::uint64_t i = 0; i < count; ++i) {
      t.data[i] = std::bit_cast<float>(get_u32(p + header + 4 * i));
    }
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  write_file_atomic(path, encode_tensor(tensor));
}

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                  std::span<const float> values) {
  write_tensor(path, Tensor({dims.begin(), dims.end()}, {values.begin(), values.end()}));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

// --- Detections -------------------------------------------------------------------

FrameDetections parse_detection_line(std::string_view line, std::size_t line_no) {
  const json doc = parse_json_line(line, line_no);
  FrameDetections frame;
  frame.frame_index = require<std::int64_t>(doc, "frame_index", line_no);
  if (frame.frame_index < 0) invariant("frame_index must be >= 0");
  const auto faces = doc.find("faces");
  if (faces == doc.end() || !faces->is_array()) throw ParseError(line_no, "missing 'faces' array");
  for (const auto& f : *faces) {
    FaceDetection det;
    const auto bbox = require<std::vector<double>>(f, "bbox", line_no);
    if (bbox.size() != 4) throw ParseError(line_no, "bbox must be [x, y, w, h]");
    det.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
    if (!(det.bbox.w >= 0.0) || !(det.bbox.h >= 0.0)) invariant("bbox width/height must be >= 0");
    det.confidence = require<float>(f, "confidence", line_no);
    if (!(det.confidence >= 0.0f && det.confidence <= 1.0f)) {
      invariant("detection confidence must lie in [0, 1]");
    }
    if (auto it = f.find("landmarks"); it != f.end() && !it->is_null()) {
      if (!it->is_array() || it->size() != 5) {
        invariant("landmarks must contain exactly 5 points");
      }
      LandmarkSet5 lm;
      for (std::size_t i = 0; i < 5; ++i) {
        const auto& pt = (*it)[i];
        if (!pt.is_array() || pt.size() != 2) throw ParseError(line_no, "landmark must be [x, y]");
        lm[i] = {pt[0].get<double>(), pt[1].get<double>()};
      }
      if (!landmarks_finite(lm)) invariant("landmarks must be finite");
      det.landmarks = lm;
    }
    frame.faces.push_back(std::move(det));
  }
  return frame;
}

std::string format_detection_line(const FrameDetections& frame) {
  json faces = json::array();
  for (const auto& f : frame.faces) {
    json face = {{"bbox", {f.bbox.x, f.bbox.y, f.bbox.w, f.bbox.h}}, {"confidence", f.confidence}};
    if (f.landmarks) {
      json lm = json::array();
      for (const auto& p : *f.landmarks) lm.push_back({p.x, p.y});
      face["landmarks"] = std::move(lm);
    }
    faces.push_back(std::move(face));
  }
  return json{{"frame_index", frame.frame_index}, {"faces", std::move(faces)}}.dump();
}

DetectionMap parse_detections(std::string_view text) {
  DetectionMap out;
  std::int64_t last = -1;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    FrameDetections frame = parse_detection_line(lines[i], i + 1);
    if (frame.frame_index <= last) {
      throw Error(Errc::NonMonotoneFrames, "line " + std::to_string(i + 1) + ": frame " +
                                               std::to_string(frame.frame_index) +
                                               " does not follow frame " + std::to_string(last));
    }
    last = frame.frame_index;
    out.emplace(frame.frame_index, std::move(frame));
  }
  return out;
}

DetectionMap read_detections(const std::filesystem::path& path) {
  return parse_detections(read_file(path));
}

void write_detections(const std::filesystem::path& path, const DetectionMap& detections) {
  std::string out;
  for (const auto& [index, frame] : detections) {
    out += format_detection_line(frame);
    out += '\n';
  }
  write_file_atomic(path, out);
}

// --- Scores -----------------------------------------------------------------------

std::string format_scores_csv(std::span<const ScoreRecord> records) {
  std::string out(kScoreCsvHeader);
  out += '\n';
  char buf[64];
  for (const auto& r : records) {
    if (r.video_id.find_first_of(",\n\r\"") != std::string::npos) {
      invariant("video_id '" + r.video_id + "' cannot be written to CSV");
    }
    if (!(r.score >= 0.0f && r.score <= 1.0f)) invariant("score must lie in [0, 1]");
    std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(r.score));
    out += r.video_id;
    out += ',';
    out += std::to_string(r.track_id);
    out += ',';
    out += std::to_string(r.clip_index);
    out += ',';
    out += buf;
    out += '\n';
  }
  return out;
}

std::vector<ScoreRecord> parse_scores_csv(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<ScoreRecord> out;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (is_blank(line)) continue;
    if (!header_seen) {
      if (line != kScoreCsvHeader) throw ParseError(i + 1, "unexpected score CSV header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 4) throw ParseError(i + 1, "expected 4 columns");
    ScoreRecord r;
    r.video_id = std::string(cols[0]);
    try {
      r.track_id = parse_int(cols[1], "track_id");
      r.clip_index = parse_int(cols[2], "clip_index");
      r.score = std::stof(std::string(cols[3]));
    } catch (const Error& e) {
      throw ParseError(i + 1, e.what());
    } catch (const std::exception&) {
      throw ParseError(i + 1, "invalid score");
    }
    if (!(r.score >= 0.0f && r.score <= 1.0f)) invariant("score must lie in [0, 1]");
    out.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError(1, "missing score CSV header");
  return out;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreRecord> records) {
  write_file_atomic(path, format_scores_csv(records));
}

std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path) {
  return parse_scores_csv(read_file(path));
}

// --- Embedding sets -----------------------------------------------------------------

void validate(const EmbeddingSet& set) {
  const auto n = set.keys.size();
  if (set.labels.size() != n) invariant("embedding set: label count differs from key count");
  if (set.visual.dims.size() != 2 || set.visual.dims[0] != n || set.visual.data.size() != n * set.visual.dims[1]) {
    throw Error(Errc::DimensionMismatch, "embedding set: visual tensor must be [N, d_v]");
  }
  if (set.audio) {
    if (set.audio->dims.size() != 2 || set.audio->dims[0] != n ||
        set.audio->data.size() != n * set.audio->dims[1]) {
      throw Error(Errc::DimensionMismatch, "embedding set: audio tensor must be [N, d_a]");
    }
  }
  for (int label : set.labels) {
    if (label != 0 && label != 1 && label != kUnknownLabel) invariant("embedding label must be 0, 1 or -1");
  }
}

void write_embedding_set(const std::filesystem::path& dir, const EmbeddingSet& set) {
  validate(set);
  std::filesystem::create_directories(dir);
  write_tensor(dir / "visual.ft", set.visual);
  if (set.audio) write_tensor(dir / "audio.ft", *set.audio);
  std::string index;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& k = set.keys[i];
    index += json{{"video_id", k.video_id},
                  {"track_id", k.track_id},
                  {"clip_index", k.clip_index},
                  {"label", set.labels[i]},
                  {"row", i}}
                 .dump();
    index += '\n';
  }
  write_file_atomic(dir / "index.jsonl", index);
}

EmbeddingSet read_embedding_set(const std::filesystem::path& dir) {
  EmbeddingSet set;
  set.visual = read_tensor(dir / "visual.ft");
  if (std::filesystem::exists(dir / "audio.ft")) set.audio = read_tensor(dir / "audio.ft");
  const std::string text = read_file(dir / "index.jsonl");
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const json doc = parse_json_line(lines[i], i + 1);
    const auto row = require<std::size_t>(doc, "row", i + 1);
    if (row != set.keys.size()) throw ParseError(i + 1, "rows must be listed in order");
    set.keys.push_back({require<std::string>(doc, "video_id", i + 1),
                        require<std::int64_t>(doc, "track_id", i + 1),
                        require<std::int64_t>(doc, "clip_index", i + 1)});
    set.labels.push_back(require<int>(doc, "label", i + 1));
  }
  validate(set);
  return set;
}

// --- Files --------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace forgepipe
