#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noncomp/corpus.hpp"

namespace noncomp::select {

using corpus::PhraseId;
using corpus::PhraseLabel;
using corpus::SentenceId;

struct SelectConfig {
  double std_threshold = 5.0;
  int min_len = 3;
  int max_len = 8;
  int pool_size = 32;
  int curated_per_side = 4;
  int final_controls = 3;
  double control_tolerance = 1.0;
  int min_valid_controls = 3;
  corpus::StdMode std_mode = corpus::StdMode::Population;

  void validate() const;
};

/// Sentiment bucket on the 11-point 0.0..1.0 scale, as an index 0..10
/// (bucket value = index / 10). Nearest tenth; exact midpoints round up.
int bucket(double sst_value);
inline double bucket_value(int index) { return index / 10.0; }

struct Subphrase {
  PhraseId phrase_id = 0;
  std::string text;
  double sst_value = 0.0;
  int sentiment_bucket = 0;
  PhraseLabel label = PhraseLabel::OTHER;
  int token_count_nonpunct = 0;
  SentenceId source_sentence_id = 0;
};

struct ControlEntry {
  Subphrase subphrase;
  std::optional<std::string> edited_text;
  std::optional<double> study1_sentiment;
  bool selected_for_study2 = false;

  /// What the participant sees: the edit if one was made.
  const std::string& display_text() const {
    return edited_text ? *edited_text : subphrase.text;
  }
};

enum class Side { A, B };
inline const char* to_string(Side s) { return s == Side::A ? "A" : "B"; }

struct CandidatePhrase {
  PhraseId phrase_id = 0;
  std::string text;
  SentenceId sentence_id = 0;
  Subphrase side_A;
  Subphrase side_B;
  std::vector<ControlEntry> controls_A;
  std::vector<ControlEntry> controls_B;
  bool curated = false;
  std::optional<double> study1_A;
  std::optional<double> study1_B;

  const Subphrase& side(Side s) const { return s == Side::A ? side_A : side_B; }
  std::vector<ControlEntry>& controls(Side s) {
    return s == Side::A ? controls_A : controls_B;
  }
  const std::vector<ControlEntry>& controls(Side s) const {
    return s == Side::A ? controls_A : controls_B;
  }
  /// Controls flagged for Study 2, in curation order.
  std::vector<const ControlEntry*> selected(Side s) const;
};

/// Every sidecar constituent usable as a subphrase: length within
/// [min_len, max_len] non-punctuation tokens, no named entity, present in
/// the dictionary. Deduplicated by phrase id, first occurrence wins.
std::vector<Subphrase> admitted_subphrases(const corpus::Corpus& corpus,
                                           const corpus::LinguisticSidecar& sidecar,
                                           const SelectConfig& config);

/// Binary constituents whose two children are admissible subphrases and
/// whose raw SST annotations agree within `std_threshold` ticks.
std::vector<CandidatePhrase> find_candidates(
    const corpus::Corpus& corpus, const corpus::LinguisticSidecar& sidecar,
    const SelectConfig& config);

/// Fills controls_A / controls_B with up to `pool_size` subphrases drawn
/// uniformly without replacement from the target's (bucket, label) group,
/// excluding the candidate's own sentence and the target text itself.
std::vector<CandidatePhrase> build_pools(std::vector<CandidatePhrase> candidates,
                                         const std::vector<Subphrase>& subphrases,
                                         std::uint64_t seed, int pool_size = 32);

std::string export_curation(const std::vector<CandidatePhrase>& candidates);
void export_curation(const std::vector<CandidatePhrase>& candidates,
                     const std::filesystem::path& path);

/// Applies a curation sheet. Candidates without any keep=1 row are dropped;
/// kept ones must have exactly `per_side` controls on each side.
std::vector<CandidatePhrase> import_curation(
    const std::vector<CandidatePhrase>& candidates,
    const std::vector<std::string>& lines, int per_side = 4);
std::vector<CandidatePhrase> import_curation(
    const std::vector<CandidatePhrase>& candidates,
    const std::filesystem::path& path, int per_side = 4);

/// Study-1 mean sentiment (0..6) keyed by normalized displayed text.
using Study1Sentiments = std::map<std::string, double>;

struct FilterResult {
  std::vector<CandidatePhrase> survivors;
  std::vector<PhraseId> discarded;
};

FilterResult filter_by_study1(const std::vector<CandidatePhrase>& candidates,
                              const Study1Sentiments& sentiments,
                              const SelectConfig& config);

}  // namespace noncomp::select
