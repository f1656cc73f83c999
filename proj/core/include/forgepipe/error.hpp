#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forgepipe {

// Every failure the library raises carries one of these codes. The CLI maps
// them onto the snake_case identifiers returned by errc_name().
enum class Errc {
  ParseError,
  InvariantError,
  IoError,
  BadMagic,
  TruncatedPayload,
  DimOverflow,
  NonMonotoneFrames,
  NonPositiveFactor,
  DegenerateConfiguration,
  EmptyFrame,
  NoFacesDetected,
  BadOrdering,
  EvenWindow,
  TrackTooShort,
  DimensionMismatch,
  SpaceMismatch,
  EmptyPositiveSet,
  WrongModality,
  ScoreOutOfRange,
  EmptyDataset,
  EmptyScores,
  SingleClass,
  UnknownVideoId,
  MissingSourceId,
  RangeBeyondStream,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Parse failures remember the 1-based line they came from.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(Errc::ParseError, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace forgepipe
