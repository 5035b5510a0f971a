#include "noncomp/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noncomp/error.hpp"
#include "noncomp/text.hpp"

namespace noncomp::eval {

int sst7_convert(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::Validation,
                "SST value " + std::to_string(value) + " outside [0,1]");
  }
  return std::min(static_cast<int>(std::floor(value * kClasses)), kClasses - 1);
}

std::vector<ModelPredictionSet> read_predictions(
    const std::vector<std::string>& lines, const std::string& model_name) {
  std::vector<ModelPredictionSet> sets;
  std::map<int, std::size_t> by_seed;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto where = model_name + ":" + std::to_string(i + 1) + ": ";
    const auto f = text::split(lines[i], '\t');
    std::int64_t seed = 0;
    if (f.size() != 2 + kClasses || !text::parse_int(f[1], seed)) {
      if (i == 0) continue;  // header
      throw Error(ErrorCode::Parse,
                  where + "expected item_id, seed and 7 probabilities");
    }
    ProbVector p{};
    double sum = 0.0;
    for (int c = 0; c < kClasses; ++c) {
      if (!text::parse_double(f[static_cast<std::size_t>(2 + c)],
                              p[static_cast<std::size_t>(c)])) {
        throw Error(ErrorCode::Parse, where + "bad probability");
      }
      if (p[static_cast<std::size_t>(c)] < 0.0) {
        throw Error(ErrorCode::Validation, where + "negative probability");
      }
      sum += p[static_cast<std::size_t>(c)];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorCode::Validation,
                  where + "probabilities sum to " + std::to_string(sum));
    }
    auto [it, fresh] = by_seed.try_emplace(static_cast<int>(seed), sets.size());
    if (fresh) {
      sets.push_back({model_name, static_cast<int>(seed), {}});
    }
    auto& rows = sets[it->second].rows;
    const auto item = std::string(text::trim(f[0]));
    if (!rows.emplace(item, p).second) {
      throw Error(ErrorCode::Validation,
                  where + "duplicate prediction for " + item);
    }
  }
  return sets;
}

std::vector<ModelPredictionSet> read_predictions(
    const std::filesystem::path& path, const std::string& model_name) {
  return read_predictions(text::read_lines(path), model_name);
}

AveragedPredictions seed_average(const std::vector<ModelPredictionSet>& sets) {
  if (sets.empty()) {
    throw Error(ErrorCode::Validation, "seed_average needs at least one seed");
  }
  const auto& first = sets.front().rows;
  for (const auto& s : sets) {
    bool same = s.rows.size() == first.size() &&
                std::equal(s.rows.begin(), s.rows.end(), first.begin(),
                           [](const auto& a, const auto& b) {
                             return a.first == b.first;
                           });
    if (!same) {
      throw Error(ErrorCode::Coverage,
                  "seed " + std::to_string(s.seed) + " of " + s.model_name +
                      " covers different items than seed " +
                      std::to_string(sets.front().seed));
    }
  }
  AveragedPredictions out;
  const auto n = static_cast<double>(sets.size());
  for (const auto& [item, _] : first) {
    AveragedPrediction avg;
    for (const auto& s : sets) {
      const auto& p = s.rows.at(item);
      for (std::size_t c = 0; c < p.size(); ++c) avg.probs[c] += p[c];
    }
    for (auto& v : avg.probs) v /= n;
    for (std::size_t c = 0; c < avg.probs.size(); ++c) {
      avg.expected_sentiment += avg.probs[c] * static_cast<double>(c);
    }
    // strict > keeps the lowest class on ties
    for (std::size_t c = 1; c < avg.probs.size(); ++c) {
      if (avg.probs[c] > avg.probs[static_cast<std::size_t>(avg.argmax_class)]) {
        avg.argmax_class = static_cast<int>(c);
      }
    }
    out.emplace(item, avg);
  }
  return out;
}

ratings::SentimentMap model_sentiments(const AveragedPredictions& predictions,
                                       const ratings::SentimentMap& human,
                                       SentimentMode mode) {
  ratings::SentimentMap out;
  std::vector<std::string> missing;
  for (const auto& [item, h] : human) {
    auto it = predictions.find(item);
    if (it == predictions.end()) {
      missing.push_back(item);
      continue;
    }
    ratings::PhraseSentiment s = h;
    s.mean_label = mode == SentimentMode::Expectation
                       ? it->second.expected_sentiment
                       : static_cast<double>(it->second.argmax_class);
    out.emplace(item, s);
  }
  if (!missing.empty()) {
    if (missing.size() > 10) missing.resize(10), missing.push_back("...");
    throw Error(ErrorCode::Coverage,
                "no model prediction for: " + text::join(missing, ","));
  }
  return out;
}

std::map<ratings::Variant, ratings::KeyedVector> model_ratings(
    const AveragedPredictions& predictions,
    const std::vector<select::CandidatePhrase>& candidates,
    const ratings::SentimentMap& human, const ratings::RatingsConfig& config,
    SentimentMode mode) {
  const auto rated = ratings::compute_ratings(
      model_sentiments(predictions, human, mode), candidates, config);
  std::map<ratings::Variant, ratings::KeyedVector> out;
  for (auto v : ratings::kAllVariants) out[v] = ratings::to_variant(rated, v);
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::Validation, "pearson: length mismatch");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::Undefined, "pearson needs at least two pairs");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw Error(ErrorCode::Undefined, "pearson: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation pearson(const ratings::KeyedVector& x, const ratings::KeyedVector& y) {
  Correlation c;
  std::vector<double> xs, ys;
  for (const auto& [key, v] : x) {
    auto it = y.find(key);
    if (it == y.end()) {
      ++c.n_mismatch;
      continue;
    }
    xs.push_back(v);
    ys.push_back(it->second);
  }
  for (const auto& [key, _] : y) {
    if (!x.count(key)) ++c.n_mismatch;
  }
  c.n_pairs = xs.size();
  c.r = pearson(xs, ys);
  return c;
}

double macro_f1(const std::map<std::string, int>& predictions,
                const std::map<std::string, int>& labels) {
  if (labels.empty()) throw Error(ErrorCode::Validation, "macro_f1: empty input");
  std::array<double, kClasses> tp{}, fp{}, fn{};
  std::set<int> present;
  for (const auto& [item, label] : labels) {
    auto it = predictions.find(item);
    if (it == predictions.end()) {
      throw Error(ErrorCode::Coverage, "macro_f1: no prediction for " + item);
    }
    const int pred = it->second;
    if (label < 0 || label >= kClasses || pred < 0 || pred >= kClasses) {
      throw Error(ErrorCode::Validation, "macro_f1: class outside 0..6");
    }
    present.insert(label);
    present.insert(pred);
    if (pred == label) {
      tp[static_cast<std::size_t>(label)] += 1;
    } else {
      fp[static_cast<std::size_t>(pred)] += 1;
      fn[static_cast<std::size_t>(label)] += 1;
    }
  }
  double sum = 0.0;
  for (int c : present) {
    const auto i = static_cast<std::size_t>(c);
    const double denom = 2 * tp[i] + fp[i] + fn[i];
    // F1 = 2PR/(P+R) = 2TP / (2TP + FP + FN); zero when nothing matched
    sum += denom > 0 ? 2 * tp[i] / denom : 0.0;
  }
  return sum / static_cast<double>(present.size());
}

int human_label(double mean_label) {
  if (!(mean_label >= 0.0 && mean_label <= 6.0)) {
    throw Error(ErrorCode::Validation,
                "mean label " + std::to_string(mean_label) + " outside [0,6]");
  }
  return static_cast<int>(std::floor(mean_label + 0.5));
}

std::map<std::string, int> human_labels_for_f1(const ratings::SentimentMap& sentiments) {
  std::map<std::string, int> out;
  for (const auto& [item, s] : sentiments) out[item] = human_label(s.mean_label);
  return out;
}

std::set<select::PhraseId> top_subset(const ratings::KeyedVector& max_abs,
                                      double threshold) {
  std::set<select::PhraseId> out;
  for (const auto& [key, v] : max_abs) {
    if (v > threshold) out.insert(key.candidate);
  }
  return out;
}

EvalReport evaluate_model(const std::string& model_name,
                          const AveragedPredictions& predictions,
                          const EvalInputs& inputs) {
  if (!inputs.candidates || !inputs.human) {
    throw Error(ErrorCode::MissingInput, "evaluate_model: missing human data");
  }
  const auto& candidates = *inputs.candidates;
  const auto& human = *inputs.human;

  EvalReport report;
  report.model_name = model_name;

  const auto human_rated =
      ratings::compute_ratings(human, candidates, inputs.ratings_config);
  const auto model = model_ratings(predictions, candidates, human,
                                   inputs.ratings_config, inputs.mode);
  std::map<ratings::Variant, ratings::KeyedVector> human_variants;
  for (auto v : ratings::kAllVariants) {
    human_variants[v] = ratings::to_variant(human_rated, v);
    Correlation c;
    try {
      c = pearson(human_variants[v], model.at(v));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Undefined) throw;
      c.defined = false;
      c.r = 0.0;
    }
    report.pearson[v] = c;
  }

  const auto top = top_subset(human_variants[ratings::Variant::MaxAbs],
                              inputs.top_threshold);
  std::map<std::string, int> labels_all, preds_all, labels_top, preds_top;
  for (const auto& c : candidates) {
    const auto id = study::combination_id(c.phrase_id, study::Role::Natural);
    auto h = human.find(id);
    auto p = predictions.find(id);
    if (h == human.end()) continue;
    if (p == predictions.end()) {
      throw Error(ErrorCode::Coverage, "no model prediction for " + id);
    }
    labels_all[id] = human_label(h->second.mean_label);
    preds_all[id] = p->second.argmax_class;
    if (top.count(c.phrase_id)) {
      labels_top[id] = labels_all[id];
      preds_top[id] = preds_all[id];
    }
  }
  report.n_phrases = labels_all.size();
  report.n_top = labels_top.size();
  if (!labels_all.empty()) report.f1_all_phrases = macro_f1(preds_all, labels_all);
  if (!labels_top.empty()) report.f1_top = macro_f1(preds_top, labels_top);
  return report;
}

}  // namespace noncomp::eval
