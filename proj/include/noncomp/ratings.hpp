#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noncomp/select.hpp"
#include "noncomp/study.hpp"

namespace noncomp::ratings {

using select::CandidatePhrase;
using select::PhraseId;

struct PhraseSentiment {
  std::string item_id;
  double mean_label = 0.0;
  int n_annotations = 0;
  int n_flags = 0;
  bool flagged_ungrammatical = false;
};

using SentimentMap = std::map<std::string, PhraseSentiment>;

struct Aggregate {
  SentimentMap sentiments;
  std::vector<std::string> omitted;  // under the annotation minimum
};

/// Mean label per item over gate-passing annotations. Practice items are
/// skipped; items with fewer than `min_annotations` labels are omitted.
Aggregate aggregate_sentiment(const study::ResponseSet& responses,
                              const study::ItemCatalog& catalog,
                              int min_annotations = 3);

enum class CleanScope { AnyInvolved, NaturalOnly };

struct RatingsConfig {
  int min_controls = 2;
  bool drop_flagged_controls = true;
  CleanScope clean_scope = CleanScope::AnyInvolved;
};

struct NonCompRating {
  PhraseId candidate_id = 0;
  std::string text_A;
  std::string text_B;
  std::optional<double> sentiment_AB;
  double rating_A = 0.0;
  double rating_B = 0.0;
  bool excluded_A = false;
  bool excluded_B = false;
  std::string reason_A;
  std::string reason_B;
  int controls_used_A = 0;
  int controls_used_B = 0;
  // false when the side's computation involves a phrase flagged ungrammatical
  bool clean_A = true;
  bool clean_B = true;
};

/// rating_A = s(A B) - mean_n s(A'_n B), symmetric for B, over the
/// candidate's selected controls. Flagged or missing control combinations
/// are dropped (per config) and a side with fewer than `min_controls`
/// usable controls is excluded.
std::vector<NonCompRating> compute_ratings(
    const SentimentMap& sentiments, const std::vector<CandidatePhrase>& candidates,
    const RatingsConfig& config = {});

enum class Variant { All, AllAbs, Max, MaxAbs, AllClean };

const char* to_string(Variant v);
Variant parse_variant(std::string_view s);
inline constexpr Variant kAllVariants[] = {Variant::All, Variant::AllAbs,
                                           Variant::Max, Variant::MaxAbs,
                                           Variant::AllClean};

/// Per-side entries use side 'A'/'B'; per-candidate entries use '*'.
struct RatingKey {
  PhraseId candidate = 0;
  char side = '*';
  friend auto operator<=>(const RatingKey&, const RatingKey&) = default;
  std::string str() const;
};

using KeyedVector = std::map<RatingKey, double>;

KeyedVector to_variant(const std::vector<NonCompRating>& ratings, Variant variant);

/// The larger-magnitude side's signed rating (ties go to A); a candidate
/// with one excluded side uses the other.
std::optional<double> max_rating(const NonCompRating& r);

std::string ratings_csv(const std::vector<NonCompRating>& ratings);
std::string variant_csv(const KeyedVector& values);

}  // namespace noncomp::ratings
