#include "forgepipe/error.hpp"

namespace forgepipe {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ParseError: return "parse_error";
    case Errc::InvariantError: return "invariant_error";
    case Errc::IoError: return "io_error";
    case Errc::BadMagic: return "bad_magic";
    case Errc::TruncatedPayload: return "truncated_payload";
    case Errc::DimOverflow: return "dim_overflow";
    case Errc::NonMonotoneFrames: return "non_monotone_frames";
    case Errc::NonPositiveFactor: return "non_positive_factor";
    case Errc::DegenerateConfiguration: return "degenerate_configuration";
    case Errc::EmptyFrame: return "empty_frame";
    case Errc::NoFacesDetected: return "no_faces_detected";
    case Errc::BadOrdering: return "bad_ordering";
    case Errc::EvenWindow: return "even_window";
    case Errc::TrackTooShort: return "track_too_short";
    case Errc::DimensionMismatch: return "dimension_mismatch";
    case Errc::SpaceMismatch: return "space_mismatch";
    case Errc::EmptyPositiveSet: return "empty_positive_set";
    case Errc::WrongModality: return "wrong_modality";
    case Errc::ScoreOutOfRange: return "score_out_of_range";
    case Errc::EmptyDataset: return "empty_dataset";
    case Errc::EmptyScores: return "empty_scores";
    case Errc::SingleClass: return "single_class";
    case Errc::UnknownVideoId: return "unknown_video_id";
    case Errc::MissingSourceId: return "missing_source_id";
    case Errc::RangeBeyondStream: return "range_beyond_stream";
  }
  return "unknown";
}

}  // namespace forgepipe
