#pragma once

#include <map>
#include <string>
#include <vector>

#include "noncomp/ratings.hpp"
#include "noncomp/select.hpp"

namespace noncomp::analysis {

using select::PhraseId;

enum class Polarity { Negative, Neutral, Positive };

/// "-", "~" or "+".
const char* symbol(Polarity p);

struct PolarityThresholds {
  double neutral_low = 2.5;
  double neutral_high = 3.5;
};

struct CompositionType {
  Polarity sign_A = Polarity::Neutral;
  Polarity sign_B = Polarity::Neutral;

  std::string str() const;
  friend bool operator==(const CompositionType&, const CompositionType&) = default;
};

/// Polarity of a 0..6 Study-1 sentiment: negative below neutral_low,
/// positive above neutral_high, neutral in between (inclusive).
Polarity polarity(double sentiment, const PolarityThresholds& t = {});
CompositionType composition_type(double s_A, double s_B,
                                 const PolarityThresholds& t = {});

enum class Grouping { CompositionType, LengthPair, CategoryPair, Figurative };
const char* to_string(Grouping g);
Grouping parse_grouping(std::string_view s);
inline constexpr Grouping kAllGroupings[] = {
    Grouping::CompositionType, Grouping::LengthPair, Grouping::CategoryPair,
    Grouping::Figurative};

struct CandidateMeta {
  double study1_A = 0.0;
  double study1_B = 0.0;
  int len_A = 0;
  int len_B = 0;
  corpus::PhraseLabel label_A = corpus::PhraseLabel::OTHER;
  corpus::PhraseLabel label_B = corpus::PhraseLabel::OTHER;
  bool figurative = false;
};

std::map<PhraseId, CandidateMeta> candidate_meta(
    const std::vector<select::CandidatePhrase>& candidates,
    const std::map<PhraseId, bool>& figurative = {});

struct GroupStats {
  std::string key;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Quantile of sorted data by linear interpolation between order
/// statistics at position p * (n - 1).
double quantile(const std::vector<double>& sorted, double p);

/// One row per non-empty group, in a fixed order per grouping.
std::vector<GroupStats> group_stats(const ratings::KeyedVector& values,
                                    const std::map<PhraseId, CandidateMeta>& meta,
                                    Grouping grouping,
                                    const PolarityThresholds& thresholds = {});

struct FigurativeTags {
  std::map<PhraseId, bool> tags;
  std::vector<std::string> warnings;
};

/// Reads `candidate_id<TAB>figurative(0/1)` rows; candidates without a row
/// default to literal with a warning.
FigurativeTags load_figurative_tags(const std::vector<std::string>& lines,
                                    const std::vector<PhraseId>& candidates);
FigurativeTags load_figurative_tags(const std::filesystem::path& path,
                                    const std::vector<PhraseId>& candidates);

std::string groups_csv(const std::vector<GroupStats>& groups);

}  // namespace noncomp::analysis
