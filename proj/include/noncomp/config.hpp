#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "noncomp/analysis.hpp"
#include "noncomp/evalharness.hpp"
#include "noncomp/ratings.hpp"
#include "noncomp/select.hpp"
#include "noncomp/study.hpp"

namespace noncomp {

struct StudyConfig {
  int participants_study1 = 57;
  int participants_study2 = 90;
  int annotations_per_item = 3;
  int practice_items = 7;
  int min_annotations = 3;  // per item, for Study-2 aggregation
  study::GateConfig gate;
};

struct PipelineConfig {
  std::uint64_t seed = 13;
  select::SelectConfig select;
  StudyConfig study;
  ratings::RatingsConfig ratings;
  eval::SentimentMode model_sentiment = eval::SentimentMode::Expectation;
  double top_threshold = 1.0;
  analysis::PolarityThresholds polarity;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& config);

}  // namespace noncomp
