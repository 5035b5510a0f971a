#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "noncomp/ratings.hpp"

namespace noncomp::eval {

constexpr int kClasses = 7;
using ProbVector = std::array<double, kClasses>;

/// SST value in [0,1] to a 7-point class: min(floor(7v), 6).
int sst7_convert(double value);

struct ModelPredictionSet {
  std::string model_name;
  int seed = 0;
  std::map<std::string, ProbVector> rows;
};

/// Reads `item_id<TAB>seed<TAB>p0..p6` rows, one set per seed in order of
/// first appearance. Each vector must be non-negative and sum to 1 +- 1e-6.
std::vector<ModelPredictionSet> read_predictions(
    const std::vector<std::string>& lines, const std::string& model_name);
std::vector<ModelPredictionSet> read_predictions(
    const std::filesystem::path& path, const std::string& model_name);

struct AveragedPrediction {
  ProbVector probs{};
  double expected_sentiment = 0.0;
  int argmax_class = 0;  // ties go to the lower class
};

using AveragedPredictions = std::map<std::string, AveragedPrediction>;

AveragedPredictions seed_average(const std::vector<ModelPredictionSet>& sets);

enum class SentimentMode { Expectation, Argmax };

/// Model sentiments in place of human means for every item the human map
/// holds, carrying the human ungrammaticality flags.
ratings::SentimentMap model_sentiments(const AveragedPredictions& predictions,
                                       const ratings::SentimentMap& human,
                                       SentimentMode mode = SentimentMode::Expectation);

std::map<ratings::Variant, ratings::KeyedVector> model_ratings(
    const AveragedPredictions& predictions,
    const std::vector<select::CandidatePhrase>& candidates,
    const ratings::SentimentMap& human,
    const ratings::RatingsConfig& config = {},
    SentimentMode mode = SentimentMode::Expectation);

/// Product-moment correlation. Throws on fewer than two pairs or a
/// zero-variance side.
double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
  bool defined = true;  // false when a side has zero variance or < 2 pairs
  double r = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_mismatch = 0;  // keys present on one side only
};

/// Pearson over the key intersection.
Correlation pearson(const ratings::KeyedVector& x, const ratings::KeyedVector& y);

/// Macro-averaged F1 over the classes present in labels or predictions;
/// a class with no true or predicted members scores 0.
double macro_f1(const std::map<std::string, int>& predictions,
                const std::map<std::string, int>& labels);

/// Nearest integer, halves rounding up.
int human_label(double mean_label);
std::map<std::string, int> human_labels_for_f1(const ratings::SentimentMap& sentiments);

/// Candidates whose per-candidate rating (MaxAbs) is strictly above threshold.
std::set<select::PhraseId> top_subset(const ratings::KeyedVector& max_abs,
                                      double threshold = 1.0);

struct EvalReport {
  std::string model_name;
  std::map<ratings::Variant, Correlation> pearson;
  std::optional<double> f1_sst;
  double f1_all_phrases = 0.0;
  std::optional<double> f1_top;  // unset when the top subset is empty
  std::size_t n_phrases = 0;
  std::size_t n_top = 0;
};

struct EvalInputs {
  const std::vector<select::CandidatePhrase>* candidates = nullptr;
  const ratings::SentimentMap* human = nullptr;
  ratings::RatingsConfig ratings_config;
  SentimentMode mode = SentimentMode::Expectation;
  double top_threshold = 1.0;
};

EvalReport evaluate_model(const std::string& model_name,
                          const AveragedPredictions& predictions,
                          const EvalInputs& inputs);

}  // namespace noncomp::eval
