#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forgepipe/augment.hpp"
#include "forgepipe/head.hpp"
#include "forgepipe/losses.hpp"
#include "forgepipe/sampling.hpp"
#include "forgepipe/tracking.hpp"

namespace forgepipe {

struct SamplingConfig {
  TimeBase time_base;
  std::int64_t train_clips = 4;
  std::int64_t inference_clips = kMaxInferenceClips;
};

struct EvalConfig {
  double threshold = 0.5;
  std::vector<std::string> exclude_tags;
};

struct EnrichmentConfig {
  TimeBase time_base;
  std::filesystem::path audio_dir;
};

// Every section is optional in the file; missing keys keep module defaults.
// Unknown keys are rejected so typos surface as errors.
struct PipelineConfig {
  TrackerConfig tracking;
  SamplingConfig sampling;
  AugmentConfig augment;
  LossConfig losses;
  HeadConfig head;
  EvalConfig eval;
  EnrichmentConfig enrichment;
  std::map<std::string, std::filesystem::path> paths;
};

void validate(const PipelineConfig& cfg);
PipelineConfig parse_pipeline_config(std::string_view json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string format_pipeline_config(const PipelineConfig& cfg);

}  // namespace forgepipe
