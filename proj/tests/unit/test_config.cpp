#include <doctest.h>

#include <fstream>

#include "noncomp/config.hpp"
#include "noncomp/error.hpp"
#include "tempdir.hpp"

using namespace noncomp;
using nlohmann::json;

namespace {

ErrorCode code_of(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Undefined;
}

}  // namespace

TEST_CASE("an empty document yields the defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.seed == 13);
  CHECK(c.select.std_threshold == 5.0);
  CHECK(c.select.pool_size == 32);
  CHECK(c.select.final_controls == 3);
  CHECK(c.study.participants_study1 == 57);
  CHECK(c.study.participants_study2 == 90);
  CHECK(c.study.annotations_per_item == 3);
  CHECK(c.study.practice_items == 7);
  CHECK(c.ratings.min_controls == 2);
  CHECK(c.ratings.drop_flagged_controls);
  CHECK(c.ratings.clean_scope == ratings::CleanScope::AnyInvolved);
  CHECK(c.model_sentiment == eval::SentimentMode::Expectation);
  CHECK(c.top_threshold == 1.0);
  CHECK(c.polarity.neutral_low == 2.5);
  CHECK(c.polarity.neutral_high == 3.5);
}

TEST_CASE("values round-trip through JSON") {
  const auto doc = json::parse(R"({
    "seed": 7,
    "select": {"std_threshold": 4.0, "std_mode": "sample", "pool_size": 20},
    "study": {"participants_study2": 30, "gate": {"max_mae": 1.5, "min_rho": 0.5}},
    "ratings": {"min_controls": 3, "drop_flagged_controls": false, "clean_scope": "natural_only"},
    "eval": {"model_sentiment": "argmax", "top_threshold": 0.5},
    "analysis": {"neutral_low": 2.0, "neutral_high": 4.0}
  })");
  const auto c = config_from_json(doc);
  CHECK(c.seed == 7);
  CHECK(c.select.std_mode == corpus::StdMode::Sample);
  CHECK(c.select.pool_size == 20);
  CHECK(c.study.participants_study2 == 30);
  CHECK(c.study.gate.min_rho == 0.5);
  CHECK(c.ratings.clean_scope == ratings::CleanScope::NaturalOnly);
  CHECK_FALSE(c.ratings.drop_flagged_controls);
  CHECK(c.model_sentiment == eval::SentimentMode::Argmax);
  CHECK(c.polarity.neutral_high == 4.0);
  CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
}

TEST_CASE("unknown keys, bad types and bad enum values are config errors") {
  CHECK(code_of(json::parse(R"({"sed": 1})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"select": {"pool": 3}})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"study": {"gate": {"rho": 1}}})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"select": {"pool_size": "many"}})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"select": 4})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"select": {"std_mode": "median"}})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"ratings": {"clean_scope": "all"}})")) == ErrorCode::Config);
  CHECK(code_of(json::parse(R"({"eval": {"model_sentiment": "mode"}})")) == ErrorCode::Config);
}

TEST_CASE("validate rejects out-of-range settings") {
  auto bad = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  bad([](PipelineConfig& c) { c.study.participants_study2 = 0; });
  bad([](PipelineConfig& c) { c.study.practice_items = 1; });
  bad([](PipelineConfig& c) { c.study.gate.min_rho = 1.5; });
  bad([](PipelineConfig& c) { c.ratings.min_controls = 0; });
  bad([](PipelineConfig& c) { c.polarity.neutral_low = 4.0; });
  bad([](PipelineConfig& c) { c.select.pool_size = 0; });
  CHECK_NOTHROW(PipelineConfig{}.validate());
}

TEST_CASE("load_config reports missing and malformed files") {
  testing::TempDir dir("config");
  try {
    load_config(dir / "absent.json");
    FAIL("missing file accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingInput);
  }
  std::ofstream(dir / "bad.json") << "{\"seed\": ";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), Error);
  std::ofstream(dir / "ok.json") << R"({"seed": 99})";
  CHECK(load_config(dir / "ok.json").seed == 99);
}
