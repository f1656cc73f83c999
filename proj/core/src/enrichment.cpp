#include "forgepipe/enrichment.hpp"

#include "forgepipe/error.hpp"
#include "json.hpp"

namespace forgepipe {
namespace {

using json = nlohmann::json;

bool is_fake(const Manipulation& m) {
  switch (m.kind) {
    case ManipulationKind::Deepfake:
    case ManipulationKind::FaceSwap:
    case ManipulationKind::Face2Face:
    case ManipulationKind::NeuralTextures:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view audio_origin_name(AudioOrigin origin) noexcept {
  switch (origin) {
    case AudioOrigin::TargetAudio: return "TargetAudio";
    case AudioOrigin::SourceAudio: return "SourceAudio";
    case AudioOrigin::OwnAudio: return "OwnAudio";
    case AudioOrigin::None: return "None";
  }
  return "None";
}

std::string_view enrichment_status_name(EnrichmentStatus status) noexcept {
  switch (status) {
    case EnrichmentStatus::Enriched: return "Enriched";
    case EnrichmentStatus::UnenrichedNoURL: return "UnenrichedNoURL";
    case EnrichmentStatus::UnenrichedBadMapping: return "UnenrichedBadMapping";
  }
  return "UnenrichedNoURL";
}

AudioOrigin plan_audio(const Manipulation& manipulation, std::string_view target_id,
                       const std::optional<std::string>& source_id) {
  if (target_id.empty()) throw Error(Errc::InvariantError, "target_id must be non-empty");
  if (is_fake(manipulation) && (!source_id || source_id->empty())) {
    throw Error(Errc::MissingSourceId, manipulation.name() + " video without a source id");
  }
  switch (manipulation.kind) {
    case ManipulationKind::Deepfake:
    case ManipulationKind::FaceSwap:
      return AudioOrigin::TargetAudio;
    case ManipulationKind::Face2Face:
    case ManipulationKind::NeuralTextures:
      return AudioOrigin::SourceAudio;
    case ManipulationKind::None:
      return AudioOrigin::OwnAudio;
    case ManipulationKind::Other:
      return AudioOrigin::None;
  }
  return AudioOrigin::None;
}

std::string origin_video_id(AudioOrigin origin, std::string_view target_id,
                            const std::optional<std::string>& source_id) {
  switch (origin) {
    case AudioOrigin::TargetAudio:
    case AudioOrigin::OwnAudio:
      return std::string(target_id);
    case AudioOrigin::SourceAudio:
      return source_id.value_or("");
    case AudioOrigin::None:
      return {};
  }
  return {};
}

AudioCut cut_audio(std::span<const float> stream, const FrameRange& range, const TimeBase& tb) {
  validate(tb);
  if (range.start < 0 || range.end < range.start) {
    throw Error(Errc::InvariantError, "frame range must satisfy 0 <= start <= end");
  }
  const std::int64_t first = frame_to_sample(range.start, tb);
  const std::int64_t last = frame_to_sample(range.end, tb);
  if (last > static_cast<std::int64_t>(stream.size())) {
    throw Error(Errc::RangeBeyondStream, "frame range ends at sample " + std::to_string(last) +
                                             " but the stream has " + std::to_string(stream.size()));
  }
  AudioCut cut;
  cut.start_sample = first;
  cut.samples.assign(stream.begin() + first, stream.begin() + last);
  cut.degenerate = range.start == range.end;
  return cut;
}

EnrichmentSpec parse_enrichment_line(std::string_view line, std::size_t line_no) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
  try {
    EnrichmentSpec s;
    s.video_id = doc.at("video_id").get<std::string>();
    s.manipulation = Manipulation::parse(doc.at("manipulation").get<std::string>());
    s.target_id = doc.at("target_id").get<std::string>();
    if (auto it = doc.find("source_id"); it != doc.end() && !it->is_null()) {
      s.source_id = it->get<std::string>();
    }
    const auto& fr = doc.at("frame_range");
    if (!fr.is_array() || fr.size() != 2) throw ParseError(line_no, "frame_range must be [start, end]");
    s.frame_range = {fr[0].get<std::int64_t>(), fr[1].get<std::int64_t>()};
    if (auto it = doc.find("origin_audio_uri"); it != doc.end() && !it->is_null()) {
      s.origin_audio_uri = it->get<std::string>();
    }
    if (auto it = doc.find("mapping_verified"); it != doc.end() && !it->is_null()) {
      s.mapping_verified = it->get<bool>();
    }
    if (s.video_id.empty()) throw ParseError(line_no, "video_id must be non-empty");
    return s;
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
}

std::vector<EnrichmentSpec> read_enrichment_specs(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<EnrichmentSpec> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    out.push_back(parse_enrichment_line(line, line_no));
  }
  return out;
}

void validate(const EnrichmentRecord& r) {
  if (r.manipulation.kind == ManipulationKind::None && r.audio_origin != AudioOrigin::OwnAudio &&
      r.audio_origin != AudioOrigin::None) {
    throw Error(Errc::InvariantError, r.video_id + ": a real video can only use its own audio");
  }
  if (r.status == EnrichmentStatus::Enriched && r.audio_origin == AudioOrigin::None) {
    throw Error(Errc::InvariantError, r.video_id + ": enriched record without an audio origin");
  }
}

std::string format_enrichment_record(const EnrichmentRecord& r) {
  nlohmann::ordered_json doc;
  doc["video_id"] = r.video_id;
  doc["manipulation"] = r.manipulation.name();
  doc["target_id"] = r.target_id;
  doc["source_id"] = r.source_id ? json(*r.source_id) : json(nullptr);
  doc["frame_range"] = {r.frame_range.start, r.frame_range.end};
  doc["audio_origin"] = audio_origin_name(r.audio_origin);
  doc["status"] = enrichment_status_name(r.status);
  doc["origin_id"] = r.origin_id.empty() ? json(nullptr) : json(r.origin_id);
  doc["num_samples"] = r.num_samples;
  doc["degenerate"] = r.degenerate;
  return doc.dump();
}

EnrichmentResult enrich(const EnrichmentSpec& spec, const TimeBase& tb, const AudioLookup& lookup) {
  EnrichmentResult result;
  EnrichmentRecord& r = result.record;
  r.video_id = spec.video_id;
  r.manipulation = spec.manipulation;
  r.target_id = spec.target_id;
  r.source_id = spec.source_id;
  r.frame_range = spec.frame_range;
  r.audio_origin = plan_audio(spec.manipulation, spec.target_id, spec.source_id);
  r.origin_id = origin_video_id(r.audio_origin, spec.target_id, spec.source_id);
  r.status = EnrichmentStatus::UnenrichedNoURL;
  if (r.audio_origin == AudioOrigin::None) return result;

  std::optional<std::vector<float>> stream = lookup ? lookup(spec, r.origin_id) : std::nullopt;
  if (!stream) return result;

  if (spec.mapping_verified.has_value() && !*spec.mapping_verified) {
    r.status = EnrichmentStatus::UnenrichedBadMapping;
    return result;
  }
  try {
    AudioCut cut = cut_audio(*stream, spec.frame_range, tb);
    r.num_samples = static_cast<std::int64_t>(cut.samples.size());
    r.degenerate = cut.degenerate;
    r.status = EnrichmentStatus::Enriched;
    result.audio = std::move(cut);
  } catch (const Error& e) {
    if (e.code() != Errc::RangeBeyondStream) throw;
    r.status = EnrichmentStatus::UnenrichedBadMapping;
  }
  validate(r);
  return result;
}

EnrichmentLedger build_ledger(std::span<const EnrichmentRecord> records) {
  EnrichmentLedger l;
  for (const auto& r : records) {
    ++l.total_sources;
    if (r.status != EnrichmentStatus::UnenrichedNoURL) ++l.with_url;
    if (r.status == EnrichmentStatus::UnenrichedBadMapping) ++l.bad_mapping;
    if (r.status == EnrichmentStatus::Enriched) ++l.enriched;
  }
  return l;
}

EnrichmentLedger ledger_from_counts(std::int64_t total_sources, std::int64_t with_url,
                                    std::int64_t bad_mapping) {
  if (total_sources < 0 || with_url < 0 || bad_mapping < 0 || with_url > total_sources ||
      bad_mapping > with_url) {
    throw Error(Errc::InvariantError, "ledger counts must satisfy 0 <= bad <= with_url <= total");
  }
  return {total_sources, with_url, bad_mapping, with_url - bad_mapping};
}

std::string format_ledger_json(const EnrichmentLedger& l) {
  nlohmann::ordered_json doc;
  doc["total_sources"] = l.total_sources;
  doc["with_url"] = l.with_url;
  doc["bad_mapping"] = l.bad_mapping;
  doc["enriched"] = l.enriched;
  return doc.dump();
}

}  // namespace forgepipe
