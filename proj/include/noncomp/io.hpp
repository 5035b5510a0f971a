#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "noncomp/evalharness.hpp"
#include "noncomp/ratings.hpp"
#include "noncomp/select.hpp"
#include "noncomp/study.hpp"

namespace noncomp::io {

using nlohmann::json;

json load_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; key order is nlohmann's sorted order.
void save_json(const std::filesystem::path& path, const json& doc);

json subphrases_to_json(const std::vector<select::Subphrase>& subphrases);
std::vector<select::Subphrase> subphrases_from_json(const json& doc);

json candidates_to_json(const std::vector<select::CandidatePhrase>& candidates);
std::vector<select::CandidatePhrase> candidates_from_json(const json& doc);

json items_to_json(const std::vector<study::StudyItem>& items);
std::vector<study::StudyItem> items_from_json(const json& doc);

/// {study_id, phase, batches:[{participant_slot, items:[{item_id, segments, allow_flag}]}]}
json batches_to_json(const study::StudyDefinition& def);
/// {study_id, items:[{item_id, segments, reference}]}
json practice_to_json(const study::StudyDefinition& def);
study::StudyDefinition definition_from_json(const json& batches,
                                            const json& practice);

json response_to_json(const study::Response& r);

json sentiments_to_json(const ratings::SentimentMap& sentiments);
ratings::SentimentMap sentiments_from_json(const json& doc);

json gate_to_json(const study::QualityReport& report);

json eval_report_to_json(const eval::EvalReport& report);

}  // namespace noncomp::io
