#include "noncomp/config.hpp"

#include <set>

#include "noncomp/error.hpp"
#include "noncomp/io.hpp"

namespace noncomp {

using nlohmann::json;
using ratings::CleanScope;

void PipelineConfig::validate() const {
  select.validate();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Config, what); };
  if (study.participants_study1 < 1 || study.participants_study2 < 1) {
    fail("participant counts must be positive");
  }
  if (study.annotations_per_item < 1) fail("annotations_per_item must be positive");
  if (study.practice_items < 2) fail("practice_items must be >= 2");
  if (study.min_annotations < 1) fail("min_annotations must be positive");
  if (study.gate.max_mae < 0) fail("gate.max_mae must be >= 0");
  if (study.gate.min_rho < -1 || study.gate.min_rho > 1) {
    fail("gate.min_rho must be within [-1, 1]");
  }
  if (ratings.min_controls < 1) fail("ratings.min_controls must be positive");
  if (top_threshold < 0) fail("top_threshold must be >= 0");
  if (!(polarity.neutral_low <= polarity.neutral_high)) {
    fail("need neutral_low <= neutral_high");
  }
}

namespace {

// Reads known keys out of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw Error(ErrorCode::Config, name() + " must be an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::Config, "bad value for " + path_ + key);
    }
  }

  template <typename F>
  void section(const char* key, F&& body) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    Section sub(*it, path_ + key + ".");
    body(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) {
        throw Error(ErrorCode::Config, "unknown config key " + path_ + key);
      }
    }
  }

 private:
  std::string name() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E>
E pick(const std::string& value, std::initializer_list<std::pair<const char*, E>> options,
       const char* key) {
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  throw Error(ErrorCode::Config, std::string("bad value '") + value + "' for " + key);
}

const char* name_of(CleanScope s) {
  return s == CleanScope::AnyInvolved ? "any_involved" : "natural_only";
}

}  // namespace

PipelineConfig config_from_json(const json& doc) {
  PipelineConfig c;
  Section root(doc, "");
  root.read("seed", c.seed);
  root.section("select", [&](Section& s) {
    s.read("std_threshold", c.select.std_threshold);
    s.read("min_len", c.select.min_len);
    s.read("max_len", c.select.max_len);
    s.read("pool_size", c.select.pool_size);
    s.read("curated_per_side", c.select.curated_per_side);
    s.read("final_controls", c.select.final_controls);
    s.read("control_tolerance", c.select.control_tolerance);
    s.read("min_valid_controls", c.select.min_valid_controls);
    std::string mode = c.select.std_mode == corpus::StdMode::Population
                           ? "population" : "sample";
    s.read("std_mode", mode);
    c.select.std_mode = pick<corpus::StdMode>(
        mode, {{"population", corpus::StdMode::Population},
               {"sample", corpus::StdMode::Sample}}, "select.std_mode");
  });
  root.section("study", [&](Section& s) {
    s.read("participants_study1", c.study.participants_study1);
    s.read("participants_study2", c.study.participants_study2);
    s.read("annotations_per_item", c.study.annotations_per_item);
    s.read("practice_items", c.study.practice_items);
    s.read("min_annotations", c.study.min_annotations);
    s.section("gate", [&](Section& g) {
      g.read("max_mae", c.study.gate.max_mae);
      g.read("min_rho", c.study.gate.min_rho);
    });
  });
  root.section("ratings", [&](Section& s) {
    s.read("min_controls", c.ratings.min_controls);
    s.read("drop_flagged_controls", c.ratings.drop_flagged_controls);
    std::string scope = name_of(c.ratings.clean_scope);
    s.read("clean_scope", scope);
    c.ratings.clean_scope = pick<CleanScope>(
        scope, {{"any_involved", CleanScope::AnyInvolved},
                {"natural_only", CleanScope::NaturalOnly}}, "ratings.clean_scope");
  });
  root.section("eval", [&](Section& s) {
    std::string mode = c.model_sentiment == eval::SentimentMode::Expectation
                           ? "expectation" : "argmax";
    s.read("model_sentiment", mode);
    c.model_sentiment = pick<eval::SentimentMode>(
        mode, {{"expectation", eval::SentimentMode::Expectation},
               {"argmax", eval::SentimentMode::Argmax}}, "eval.model_sentiment");
    s.read("top_threshold", c.top_threshold);
  });
  root.section("analysis", [&](Section& s) {
    s.read("neutral_low", c.polarity.neutral_low);
    s.read("neutral_high", c.polarity.neutral_high);
  });
  root.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(io::load_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingInput) throw;
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
}

json config_to_json(const PipelineConfig& c) {
  return {
      {"seed", c.seed},
      {"select",
       {{"std_threshold", c.select.std_threshold},
        {"min_len", c.select.min_len},
        {"max_len", c.select.max_len},
        {"pool_size", c.select.pool_size},
        {"curated_per_side", c.select.curated_per_side},
        {"final_controls", c.select.final_controls},
        {"control_tolerance", c.select.control_tolerance},
        {"min_valid_controls", c.select.min_valid_controls},
        {"std_mode",
         c.select.std_mode == corpus::StdMode::Population ? "population" : "sample"}}},
      {"study",
       {{"participants_study1", c.study.participants_study1},
        {"participants_study2", c.study.participants_study2},
        {"annotations_per_item", c.study.annotations_per_item},
        {"practice_items", c.study.practice_items},
        {"min_annotations", c.study.min_annotations},
        {"gate", {{"max_mae", c.study.gate.max_mae}, {"min_rho", c.study.gate.min_rho}}}}},
      {"ratings",
       {{"min_controls", c.ratings.min_controls},
        {"drop_flagged_controls", c.ratings.drop_flagged_controls},
        {"clean_scope", name_of(c.ratings.clean_scope)}}},
      {"eval",
       {{"model_sentiment",
         c.model_sentiment == eval::SentimentMode::Expectation ? "expectation" : "argmax"},
        {"top_threshold", c.top_threshold}}},
      {"analysis",
       {{"neutral_low", c.polarity.neutral_low},
        {"neutral_high", c.polarity.neutral_high}}},
  };
}

}  // namespace noncomp
