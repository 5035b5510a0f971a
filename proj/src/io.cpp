#include "noncomp/io.hpp"

#include <fstream>

#include "noncomp/error.hpp"
#include "noncomp/text.hpp"

namespace noncomp::io {

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const json& doc) {
  text::write_file(path, doc.dump(2) + "\n");
}

namespace {

template <typename T>
T field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::Parse, std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Parse, std::string("bad value for '") + key + "'");
  }
}

template <typename T>
std::optional<T> opt_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return field<T>(obj, key);
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json subphrase_json(const select::Subphrase& s) {
  return {{"phrase_id", s.phrase_id},
          {"text", s.text},
          {"sst_value", s.sst_value},
          {"sentiment_bucket", s.sentiment_bucket},
          {"label", corpus::to_string(s.label)},
          {"token_count_nonpunct", s.token_count_nonpunct},
          {"source_sentence_id", s.source_sentence_id}};
}

select::Subphrase subphrase_from(const json& j) {
  select::Subphrase s;
  s.phrase_id = field<select::PhraseId>(j, "phrase_id");
  s.text = field<std::string>(j, "text");
  s.sst_value = field<double>(j, "sst_value");
  s.sentiment_bucket = field<int>(j, "sentiment_bucket");
  const auto label = field<std::string>(j, "label");
  const auto parsed = corpus::parse_label(label);
  if (!parsed) throw Error(ErrorCode::Parse, "unknown phrase label '" + label + "'");
  s.label = *parsed;
  s.token_count_nonpunct = field<int>(j, "token_count_nonpunct");
  s.source_sentence_id = field<select::SentenceId>(j, "source_sentence_id");
  return s;
}

json controls_json(const std::vector<select::ControlEntry>& controls) {
  json out = json::array();
  for (const auto& c : controls) {
    out.push_back({{"subphrase", subphrase_json(c.subphrase)},
                   {"edited_text", opt_json(c.edited_text)},
                   {"study1_sentiment", opt_json(c.study1_sentiment)},
                   {"selected_for_study2", c.selected_for_study2}});
  }
  return out;
}

std::vector<select::ControlEntry> controls_from(const json& j) {
  std::vector<select::ControlEntry> out;
  for (const auto& e : j) {
    select::ControlEntry c;
    c.subphrase = subphrase_from(field<json>(e, "subphrase"));
    c.edited_text = opt_field<std::string>(e, "edited_text");
    c.study1_sentiment = opt_field<double>(e, "study1_sentiment");
    c.selected_for_study2 = field<bool>(e, "selected_for_study2");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

json subphrases_to_json(const std::vector<select::Subphrase>& subphrases) {
  json out = json::array();
  for (const auto& s : subphrases) out.push_back(subphrase_json(s));
  return out;
}

std::vector<select::Subphrase> subphrases_from_json(const json& doc) {
  std::vector<select::Subphrase> out;
  for (const auto& j : doc) out.push_back(subphrase_from(j));
  return out;
}

json candidates_to_json(const std::vector<select::CandidatePhrase>& candidates) {
  json out = json::array();
  for (const auto& c : candidates) {
    out.push_back({{"phrase_id", c.phrase_id},
                   {"text", c.text},
                   {"sentence_id", c.sentence_id},
                   {"side_A", subphrase_json(c.side_A)},
                   {"side_B", subphrase_json(c.side_B)},
                   {"controls_A", controls_json(c.controls_A)},
                   {"controls_B", controls_json(c.controls_B)},
                   {"curated", c.curated},
                   {"study1_A", opt_json(c.study1_A)},
                   {"study1_B", opt_json(c.study1_B)}});
  }
  return out;
}

std::vector<select::CandidatePhrase> candidates_from_json(const json& doc) {
  std::vector<select::CandidatePhrase> out;
  for (const auto& j : doc) {
    select::CandidatePhrase c;
    c.phrase_id = field<select::PhraseId>(j, "phrase_id");
    c.text = field<std::string>(j, "text");
    c.sentence_id = field<select::SentenceId>(j, "sentence_id");
    c.side_A = subphrase_from(field<json>(j, "side_A"));
    c.side_B = subphrase_from(field<json>(j, "side_B"));
    c.controls_A = controls_from(field<json>(j, "controls_A"));
    c.controls_B = controls_from(field<json>(j, "controls_B"));
    c.curated = field<bool>(j, "curated");
    c.study1_A = opt_field<double>(j, "study1_A");
    c.study1_B = opt_field<double>(j, "study1_B");
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

study::ItemKind parse_kind(const std::string& s) {
  for (auto k : {study::ItemKind::Subphrase, study::ItemKind::Combination,
                 study::ItemKind::Practice}) {
    if (s == study::to_string(k)) return k;
  }
  throw Error(ErrorCode::Parse, "unknown item kind '" + s + "'");
}

study::Role parse_role(const std::string& s) {
  for (auto r : {study::Role::None, study::Role::Natural, study::Role::ControlA,
                 study::Role::ControlB}) {
    if (s == study::to_string(r)) return r;
  }
  throw Error(ErrorCode::Parse, "unknown item role '" + s + "'");
}

}  // namespace

json items_to_json(const std::vector<study::StudyItem>& items) {
  json out = json::array();
  for (const auto& i : items) {
    out.push_back({{"item_id", i.item_id},
                   {"phase", i.phase},
                   {"kind", study::to_string(i.kind)},
                   {"segments", i.segments},
                   {"candidate_id", i.candidate_id},
                   {"role", study::to_string(i.role)},
                   {"control_index", i.control_index},
                   {"control_phrase_id", i.control_phrase_id},
                   {"allow_flag", i.allow_flag},
                   {"reference", opt_json(i.reference)}});
  }
  return out;
}

std::vector<study::StudyItem> items_from_json(const json& doc) {
  std::vector<study::StudyItem> out;
  for (const auto& j : doc) {
    study::StudyItem i;
    i.item_id = field<std::string>(j, "item_id");
    i.phase = field<int>(j, "phase");
    i.kind = parse_kind(field<std::string>(j, "kind"));
    i.segments = field<std::vector<std::string>>(j, "segments");
    i.candidate_id = field<select::PhraseId>(j, "candidate_id");
    i.role = parse_role(field<std::string>(j, "role"));
    i.control_index = field<int>(j, "control_index");
    i.control_phrase_id = field<select::PhraseId>(j, "control_phrase_id");
    i.allow_flag = field<bool>(j, "allow_flag");
    i.reference = opt_field<int>(j, "reference");
    out.push_back(std::move(i));
  }
  return out;
}

json batches_to_json(const study::StudyDefinition& def) {
  json batches = json::array();
  for (std::size_t slot = 0; slot < def.batches.size(); ++slot) {
    json items = json::array();
    for (const auto& i : def.batches[slot]) {
      items.push_back({{"item_id", i.item_id},
                       {"segments", i.segments},
                       {"allow_flag", i.allow_flag}});
    }
    batches.push_back({{"participant_slot", slot}, {"items", std::move(items)}});
  }
  return {{"study_id", def.study_id},
          {"phase", def.phase},
          {"batches", std::move(batches)}};
}

json practice_to_json(const study::StudyDefinition& def) {
  json items = json::array();
  for (const auto& i : def.practice) {
    items.push_back({{"item_id", i.item_id},
                     {"segments", i.segments},
                     {"reference", opt_json(i.reference)}});
  }
  return {{"study_id", def.study_id}, {"items", std::move(items)}};
}

study::StudyDefinition definition_from_json(const json& batches,
                                            const json& practice) {
  study::StudyDefinition def;
  def.study_id = field<std::string>(batches, "study_id");
  def.phase = field<int>(batches, "phase");
  if (field<std::string>(practice, "study_id") != def.study_id) {
    throw Error(ErrorCode::Validation,
                "practice file belongs to a different study than " + def.study_id);
  }
  const auto& list = field<json>(batches, "batches");
  def.batches.resize(list.size());
  for (const auto& b : list) {
    const auto slot = field<int>(b, "participant_slot");
    if (slot < 0 || slot >= static_cast<int>(list.size())) {
      throw Error(ErrorCode::Validation, "participant slot out of range");
    }
    for (const auto& i : field<json>(b, "items")) {
      def.batches[static_cast<std::size_t>(slot)].push_back(
          {field<std::string>(i, "item_id"),
           field<std::vector<std::string>>(i, "segments"),
           field<bool>(i, "allow_flag"), std::nullopt});
    }
  }
  for (const auto& i : field<json>(practice, "items")) {
    auto ref = opt_field<int>(i, "reference");
    if (!ref || *ref < 0 || *ref >= study::kNumLabels) {
      throw Error(ErrorCode::Validation, "practice item " +
                                             field<std::string>(i, "item_id") +
                                             " needs a reference label 0..6");
    }
    def.practice.push_back({field<std::string>(i, "item_id"),
                            field<std::vector<std::string>>(i, "segments"),
                            false, ref});
  }
  return def;
}

json response_to_json(const study::Response& r) {
  return {{"participant_id", r.participant_id},
          {"item_id", r.item_id},
          {"label", r.label},
          {"ungrammatical", r.ungrammatical},
          {"ts", r.ts}};
}

json sentiments_to_json(const ratings::SentimentMap& sentiments) {
  json out = json::object();
  for (const auto& [id, s] : sentiments) {
    out[id] = {{"mean_label", s.mean_label},
               {"n_annotations", s.n_annotations},
               {"n_flags", s.n_flags},
               {"flagged_ungrammatical", s.flagged_ungrammatical}};
  }
  return out;
}

ratings::SentimentMap sentiments_from_json(const json& doc) {
  ratings::SentimentMap out;
  for (const auto& [id, j] : doc.items()) {
    ratings::PhraseSentiment s;
    s.item_id = id;
    s.mean_label = field<double>(j, "mean_label");
    s.n_annotations = field<int>(j, "n_annotations");
    s.n_flags = field<int>(j, "n_flags");
    s.flagged_ungrammatical = field<bool>(j, "flagged_ungrammatical");
    out.emplace(id, s);
  }
  return out;
}

json gate_to_json(const study::QualityReport& report) {
  return {{"participant_id", report.participant_id},
          {"mae", report.mae},
          {"spearman_rho", opt_json(report.spearman_rho)},
          {"pass", report.pass}};
}

json eval_report_to_json(const eval::EvalReport& report) {
  json pearson = json::object();
  for (const auto& [variant, c] : report.pearson) {
    pearson[ratings::to_string(variant)] = {
        {"r", c.defined ? json(c.r) : json(nullptr)},
        {"n_pairs", c.n_pairs},
        {"n_mismatch", c.n_mismatch}};
  }
  return {{"model", report.model_name},
          {"pearson", std::move(pearson)},
          {"f1_sst", opt_json(report.f1_sst)},
          {"f1_all_phrases", report.f1_all_phrases},
          {"f1_top", opt_json(report.f1_top)},
          {"n_phrases", report.n_phrases},
          {"n_top", report.n_top}};
}

}  // namespace noncomp::io
