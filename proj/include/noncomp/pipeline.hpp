#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "noncomp/config.hpp"

namespace noncomp::pipeline {

using nlohmann::json;

/// Flat directory of stage-named artifacts. Each stage reads earlier
/// artifacts and writes its own; none rewrites another stage's output.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path dir) : dir_(std::move(dir)) {}
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }
  /// Throws MissingInput naming the artifact and the stage that makes it.
  std::filesystem::path require(const std::string& name, const std::string& stage) const;

 private:
  std::filesystem::path dir_;
};

/// SST-layout input files plus the constituency sidecar.
struct CorpusInputs {
  std::filesystem::path sentences;
  std::filesystem::path trees;
  std::filesystem::path dictionary;
  std::filesystem::path sentiment;
  std::filesystem::path raw_annotations;
  std::filesystem::path sidecar;

  /// datasetSentences.txt, STree.txt, dictionary.txt, sentiment_labels.txt,
  /// raw_annotations.txt and sidecar.tsv inside `dir`.
  static CorpusInputs in_dir(const std::filesystem::path& dir);
};

std::string study_id(int phase);

// Each stage returns a machine-readable summary.
json corpus_validate(const Workspace& ws, const PipelineConfig& cfg,
                     const CorpusInputs& inputs);
json select_candidates(const Workspace& ws, const PipelineConfig& cfg);
json pools_build(const Workspace& ws, const PipelineConfig& cfg);
/// `auto_keep` pre-marks the first curated_per_side controls of each side,
/// for dry runs without a human curator.
json pools_export(const Workspace& ws, const PipelineConfig& cfg, bool auto_keep);
json pools_import(const Workspace& ws, const PipelineConfig& cfg,
                  const std::optional<std::filesystem::path>& sheet);
json study_gen(const Workspace& ws, const PipelineConfig& cfg, int phase);
json study_gate(const Workspace& ws, const PipelineConfig& cfg, int phase);
json study_alpha(const Workspace& ws, const PipelineConfig& cfg, int phase);
json study_filter(const Workspace& ws, const PipelineConfig& cfg);
json ratings_compute(const Workspace& ws, const PipelineConfig& cfg);

struct ModelSpec {
  std::string name;
  std::filesystem::path predictions;
  std::optional<std::filesystem::path> sst_predictions;  // keyed by phrase id
};
/// Parses "name=path".
ModelSpec parse_model_spec(const std::string& arg);

json eval_run(const Workspace& ws, const PipelineConfig& cfg,
              const std::vector<ModelSpec>& models);
json analyze(const Workspace& ws, const PipelineConfig& cfg,
             const std::optional<std::filesystem::path>& figurative);

}  // namespace noncomp::pipeline
