#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forgepipe/dataio.hpp"
#include "forgepipe/sampling.hpp"

namespace forgepipe {

enum class AudioOrigin { TargetAudio, SourceAudio, OwnAudio, None };
enum class EnrichmentStatus { Enriched, UnenrichedNoURL, UnenrichedBadMapping };

std::string_view audio_origin_name(AudioOrigin origin) noexcept;
std::string_view enrichment_status_name(EnrichmentStatus status) noexcept;

// Half-open frame interval [start, end).
struct FrameRange {
  std::int64_t start = 0;
  std::int64_t end = 0;

  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

// Face swaps keep the target's lips, reenactments follow the source.
// Unknown manipulations get no audio.
AudioOrigin plan_audio(const Manipulation& manipulation, std::string_view target_id,
                       const std::optional<std::string>& source_id);

// Id of the video whose audio track is used; empty for AudioOrigin::None.
std::string origin_video_id(AudioOrigin origin, std::string_view target_id,
                            const std::optional<std::string>& source_id);

struct AudioCut {
  std::vector<float> samples;
  std::int64_t start_sample = 0;
  bool degenerate = false;  // empty frame range
};

// Samples [frame_to_sample(start), frame_to_sample(end)) of `stream`.
// Throws RangeBeyondStream when the range runs past the end of the stream.
AudioCut cut_audio(std::span<const float> stream, const FrameRange& range, const TimeBase& tb);

// One line of the enrichment plan input.
struct EnrichmentSpec {
  std::string video_id;
  Manipulation manipulation;
  std::string target_id;
  std::optional<std::string> source_id;
  FrameRange frame_range;
  std::optional<std::string> origin_audio_uri;
  // Outcome of manual frame-mapping review; false forces UnenrichedBadMapping.
  std::optional<bool> mapping_verified;
};

EnrichmentSpec parse_enrichment_line(std::string_view line, std::size_t line_no);
std::vector<EnrichmentSpec> read_enrichment_specs(const std::filesystem::path& path);

struct EnrichmentRecord {
  std::string video_id;
  Manipulation manipulation;
  std::string target_id;
  std::optional<std::string> source_id;
  FrameRange frame_range;
  AudioOrigin audio_origin = AudioOrigin::None;
  EnrichmentStatus status = EnrichmentStatus::UnenrichedNoURL;
  std::string origin_id;
  std::int64_t num_samples = 0;
  bool degenerate = false;
};

void validate(const EnrichmentRecord& record);
std::string format_enrichment_record(const EnrichmentRecord& record);

// Returns the origin video's audio stream, or nullopt when no URL/stream exists.
using AudioLookup =
    std::function<std::optional<std::vector<float>>(const EnrichmentSpec&, const std::string& origin_id)>;

struct EnrichmentResult {
  EnrichmentRecord record;
  std::optional<AudioCut> audio;
};

EnrichmentResult enrich(const EnrichmentSpec& spec, const TimeBase& tb, const AudioLookup& lookup);

struct EnrichmentLedger {
  std::int64_t total_sources = 0;
  std::int64_t with_url = 0;
  std::int64_t bad_mapping = 0;
  std::int64_t enriched = 0;

  friend bool operator==(const EnrichmentLedger&, const EnrichmentLedger&) = default;
};

EnrichmentLedger build_ledger(std::span<const EnrichmentRecord> records);
// Fills `enriched` from the other counts.
EnrichmentLedger ledger_from_counts(std::int64_t total_sources, std::int64_t with_url,
                                    std::int64_t bad_mapping);
std::string format_ledger_json(const EnrichmentLedger& ledger);

}  // namespace forgepipe
