#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "noncomp/pipeline.hpp"

namespace noncomp::synthetic {

struct CorpusSpec {
  int good_candidates = 259;  // survive Study 1 under noise-free annotators
  int bad_groups = 3;         // five candidates each, all discarded by Study 1
  int noisy_sentences = 10;   // root annotations too spread to qualify
  int practice_sentences = 7; // one per 7-point class
};

struct Corpus {
  pipeline::CorpusInputs inputs;
  std::filesystem::path figurative_tags;
  std::map<std::string, int> perceived;   // subphrase text -> Study-1 label
  std::set<std::int64_t> planted;         // candidates with a planted non-compositional effect
  int expected_candidates = 0;
  int expected_survivors = 0;
};

Corpus write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec = {});

struct Annotators {
  std::set<int> spammer_slots;  // fail the practice gate
  double noise = 0.0;           // chance of a +-1 slip on Study-2 items
  std::uint64_t seed = 99;
};

/// Label a noise-free annotator gives a Study-2 combination.
int combination_label(const Corpus& corpus, const std::string& item_id,
                      const std::vector<std::string>& segments, bool with_effect);

/// Writes study<phase>_responses.jsonl: every slot answers its practice
/// items and batch. Participant ids follow the service's session ids.
void simulate_responses(const pipeline::Workspace& ws, int phase, const Corpus& corpus,
                        const Annotators& annotators);

/// Three-seed prediction TSV over the Study-2 items of `ws`. The model is
/// compositional: it never sees the planted effects.
void write_predictions(const pipeline::Workspace& ws, const Corpus& corpus,
                       const std::filesystem::path& out, std::uint64_t seed);

/// Three-seed prediction TSV keyed by SST phrase id for every admitted subphrase.
void write_sst_predictions(const pipeline::Workspace& ws, const std::filesystem::path& out,
                           std::uint64_t seed);

/// Runs every stage from corpus validation through analysis in `ws`.
void run_pipeline(const pipeline::Workspace& ws, const Corpus& corpus,
                  const PipelineConfig& cfg, const Annotators& annotators = {});

}  // namespace noncomp::synthetic
