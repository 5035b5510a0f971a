#include "noncomp/pipeline.hpp"

#include <algorithm>

#include "noncomp/analysis.hpp"
#include "noncomp/corpus.hpp"
#include "noncomp/error.hpp"
#include "noncomp/evalharness.hpp"
#include "noncomp/io.hpp"
#include "noncomp/ratings.hpp"
#include "noncomp/rng.hpp"
#include "noncomp/select.hpp"
#include "noncomp/study.hpp"
#include "noncomp/text.hpp"

namespace noncomp::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "corpus_manifest.json";
constexpr const char* kSubphrases = "subphrases.json";
constexpr const char* kCandidates = "candidates.json";
constexpr const char* kPools = "pools.json";
constexpr const char* kCuration = "curation.tsv";
constexpr const char* kCurated = "curated.json";
constexpr const char* kSurvivors = "survivors.json";
constexpr const char* kSentiments = "sentiments.json";
constexpr const char* kRatings = "ratings.csv";

std::string phased(int phase, const std::string& suffix) {
  return "study" + std::to_string(phase) + "_" + suffix;
}

void check_phase(int phase) {
  if (phase != 1 && phase != 2) throw Error(ErrorCode::Validation, "phase must be 1 or 2");
}

struct LoadedCorpus {
  corpus::Corpus corpus;
  corpus::LinguisticSidecar sidecar;
};

LoadedCorpus load_corpus(const Workspace& ws) {
  const auto m = io::load_json(ws.require(kManifest, "corpus validate"));
  const auto& f = m.at("files");
  corpus::CorpusFiles files{f.at("sentences").get<std::string>(),
                            f.at("trees").get<std::string>(),
                            f.at("dictionary").get<std::string>(),
                            f.at("sentiment").get<std::string>(),
                            f.at("raw_annotations").get<std::string>()};
  return {corpus::parse_corpus(files),
          corpus::parse_sidecar(fs::path(f.at("sidecar").get<std::string>()))};
}

std::vector<select::CandidatePhrase> load_candidates(const Workspace& ws,
                                                     const char* name,
                                                     const std::string& stage) {
  return io::candidates_from_json(io::load_json(ws.require(name, stage)));
}

void save_text(const Workspace& ws, const std::string& name, const std::string& body) {
  text::write_file(ws.file(name), body);
}

struct StudyFiles {
  std::vector<study::StudyItem> items;
  std::vector<study::StudyItem> practice;
  study::ItemCatalog catalog;
};

StudyFiles load_study(const Workspace& ws, int phase) {
  const auto gen = "study gen --phase " + std::to_string(phase);
  StudyFiles out;
  out.items = io::items_from_json(io::load_json(ws.require(phased(phase, "items.json"), gen)));
  out.practice = io::items_from_json(
      io::load_json(ws.require(phased(phase, "practice_items.json"), gen)));
  out.catalog = study::make_catalog(out.items, out.practice);
  return out;
}

study::ResponseSet load_responses(const Workspace& ws, const PipelineConfig& cfg,
                                  int phase, const StudyFiles& files) {
  const auto name = phased(phase, "responses.jsonl");
  const auto path = ws.require(name, "the annotation service export (serve)");
  return study::ingest_responses(path, files.catalog, cfg.study.gate);
}

json gate_summary(const study::ResponseSet& set) {
  json reports = json::array();
  int failed = 0;
  for (const auto& [_, r] : set.gate) {
    reports.push_back(io::gate_to_json(r));
    if (!r.pass) ++failed;
  }
  return {{"participants", set.gate.size() + set.ungated.size()},
          {"gated", set.gate.size()},
          {"failed", failed},
          {"ungated", std::vector<std::string>(set.ungated.begin(), set.ungated.end())},
          {"reports", std::move(reports)},
          {"warnings", set.warnings}};
}

}  // namespace

fs::path Workspace::require(const std::string& name, const std::string& stage) const {
  auto path = file(name);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingInput,
                "missing " + path.string() + "; produce it with `" + stage + "` first");
  }
  return path;
}

CorpusInputs CorpusInputs::in_dir(const fs::path& dir) {
  return {dir / "datasetSentences.txt", dir / "STree.txt",
          dir / "dictionary.txt",       dir / "sentiment_labels.txt",
          dir / "raw_annotations.txt",  dir / "sidecar.tsv"};
}

std::string study_id(int phase) { return "study" + std::to_string(phase); }

json corpus_validate(const Workspace& ws, const PipelineConfig& cfg,
                     const CorpusInputs& in) {
  cfg.validate();
  for (const auto& p : {in.sentences, in.trees, in.dictionary, in.sentiment,
                        in.raw_annotations, in.sidecar}) {
    if (!fs::exists(p)) throw Error(ErrorCode::MissingInput, "missing input " + p.string());
  }
  const auto c = corpus::parse_corpus(
      {in.sentences, in.trees, in.dictionary, in.sentiment, in.raw_annotations});
  const auto sidecar = corpus::parse_sidecar(in.sidecar);
  std::size_t entries = 0;
  std::size_t uncovered = 0;
  for (const auto& [sid, spans] : sidecar.sentences) {
    entries += spans.size();
    if (!c.find_tree(sid)) ++uncovered;
  }
  json summary = {{"stage", "corpus validate"},
                  {"sentences", c.trees.size()},
                  {"phrases", c.phrases().size()},
                  {"sidecar_entries", entries},
                  {"sidecar_sentences_without_tree", uncovered}};
  json manifest = {{"files",
                    {{"sentences", in.sentences.string()},
                     {"trees", in.trees.string()},
                     {"dictionary", in.dictionary.string()},
                     {"sentiment", in.sentiment.string()},
                     {"raw_annotations", in.raw_annotations.string()},
                     {"sidecar", in.sidecar.string()}}},
                   {"summary", summary}};
  fs::create_directories(ws.dir());
  io::save_json(ws.file(kManifest), manifest);
  return summary;
}

json select_candidates(const Workspace& ws, const PipelineConfig& cfg) {
  cfg.validate();
  const auto loaded = load_corpus(ws);
  const auto subs = select::admitted_subphrases(loaded.corpus, loaded.sidecar, cfg.select);
  const auto cands = select::find_candidates(loaded.corpus, loaded.sidecar, cfg.select);
  io::save_json(ws.file(kSubphrases), io::subphrases_to_json(subs));
  io::save_json(ws.file(kCandidates), io::candidates_to_json(cands));
  return {{"stage", "select candidates"},
          {"subphrases", subs.size()},
          {"candidates", cands.size()}};
}

json pools_build(const Workspace& ws, const PipelineConfig& cfg) {
  cfg.validate();
  auto cands = load_candidates(ws, kCandidates, "select candidates");
  const auto subs = io::subphrases_from_json(
      io::load_json(ws.require(kSubphrases, "select candidates")));
  const auto pooled = select::build_pools(std::move(cands), subs,
                                          derive_seed(cfg.seed, 1, 0),
                                          cfg.select.pool_size);
  std::size_t short_pools = 0;
  for (const auto& c : pooled) {
    for (auto side : {select::Side::A, select::Side::B}) {
      if (static_cast<int>(c.controls(side).size()) < cfg.select.curated_per_side) {
        ++short_pools;
      }
    }
  }
  io::save_json(ws.file(kPools), io::candidates_to_json(pooled));
  return {{"stage", "pools build"},
          {"candidates", pooled.size()},
          {"pool_size", cfg.select.pool_size},
          {"sides_below_curation_size", short_pools}};
}

json pools_export(const Workspace& ws, const PipelineConfig& cfg, bool auto_keep) {
  auto cands = load_candidates(ws, kPools, "pools build");
  if (auto_keep) {
    for (auto& c : cands) {
      if (static_cast<int>(c.controls_A.size()) < cfg.select.curated_per_side ||
          static_cast<int>(c.controls_B.size()) < cfg.select.curated_per_side) {
        continue;
      }
      c.controls_A.resize(static_cast<std::size_t>(cfg.select.curated_per_side));
      c.controls_B.resize(static_cast<std::size_t>(cfg.select.curated_per_side));
      c.curated = true;
    }
  }
  select::export_curation(cands, ws.file(kCuration));
  return {{"stage", "pools export"},
          {"candidates", cands.size()},
          {"auto_keep", auto_keep},
          {"sheet", ws.file(kCuration).string()}};
}

json pools_import(const Workspace& ws, const PipelineConfig& cfg,
                  const std::optional<fs::path>& sheet) {
  cfg.validate();
  const auto cands = load_candidates(ws, kPools, "pools build");
  const auto path = sheet ? *sheet : ws.require(kCuration, "pools export");
  if (!fs::exists(path)) throw Error(ErrorCode::MissingInput, "missing " + path.string());
  const auto curated =
      select::import_curation(cands, path, cfg.select.curated_per_side);
  io::save_json(ws.file(kCurated), io::candidates_to_json(curated));
  return {{"stage", "pools import"},
          {"candidates_in", cands.size()},
          {"curated", curated.size()},
          {"dropped", cands.size() - curated.size()}};
}

json study_gen(const Workspace& ws, const PipelineConfig& cfg, int phase) {
  cfg.validate();
  check_phase(phase);
  const auto cands = phase == 1 ? load_candidates(ws, kCurated, "pools import")
                                : load_candidates(ws, kSurvivors, "study filter");
  const auto subs = io::subphrases_from_json(
      io::load_json(ws.require(kSubphrases, "select candidates")));
  const auto items = study::make_items(cands, phase);

  // Practice phrases must not double as study stimuli.
  std::set<std::string> exclude;
  for (const auto& c : cands) {
    exclude.insert(text::normalize(c.side_A.text));
    exclude.insert(text::normalize(c.side_B.text));
    for (auto side : {select::Side::A, select::Side::B}) {
      for (const auto& ctrl : c.controls(side)) {
        exclude.insert(text::normalize(ctrl.display_text()));
        exclude.insert(text::normalize(ctrl.subphrase.text));
      }
    }
  }
  const auto practice = study::make_practice_items(
      subs, phase, cfg.study.practice_items, derive_seed(cfg.seed, 2, phase), exclude);

  std::vector<std::string> ids;
  for (const auto& i : items) ids.push_back(i.item_id);
  const int participants =
      phase == 1 ? cfg.study.participants_study1 : cfg.study.participants_study2;
  const auto batches = study::assign_batches(ids, participants,
                                             cfg.study.annotations_per_item,
                                             derive_seed(cfg.seed, 3, phase));
  const auto def = study::make_definition(study_id(phase), phase, batches, items, practice);

  io::save_json(ws.file(phased(phase, "items.json")), io::items_to_json(items));
  io::save_json(ws.file(phased(phase, "practice_items.json")), io::items_to_json(practice));
  io::save_json(ws.file(phased(phase, "batches.json")), io::batches_to_json(def));
  io::save_json(ws.file(phased(phase, "practice.json")), io::practice_to_json(def));

  std::size_t lo = ids.size(), hi = 0;
  for (const auto& b : batches) {
    lo = std::min(lo, b.item_ids.size());
    hi = std::max(hi, b.item_ids.size());
  }
  return {{"stage", "study gen"},
          {"phase", phase},
          {"candidates", cands.size()},
          {"items", items.size()},
          {"practice_items", practice.size()},
          {"participants", participants},
          {"batch_size_min", lo},
          {"batch_size_max", hi}};
}

json study_gate(const Workspace& ws, const PipelineConfig& cfg, int phase) {
  cfg.validate();
  check_phase(phase);
  const auto files = load_study(ws, phase);
  const auto set = load_responses(ws, cfg, phase, files);
  auto summary = gate_summary(set);
  io::save_json(ws.file(phased(phase, "gate.json")), summary);
  summary.erase("reports");
  summary["stage"] = "study gate";
  summary["phase"] = phase;
  return summary;
}

json study_alpha(const Workspace& ws, const PipelineConfig& cfg, int phase) {
  cfg.validate();
  check_phase(phase);
  const auto files = load_study(ws, phase);
  const auto set = load_responses(ws, cfg, phase, files);
  std::vector<std::vector<int>> units;
  for (auto& [_, labels] : set.labels_by_item(files.catalog)) units.push_back(labels);
  const auto report = study::krippendorff_alpha_ordinal(units);
  json out = {{"stage", "study alpha"},
              {"phase", phase},
              {"alpha", report.alpha},
              {"scale", report.scale},
              {"items", report.n_items},
              {"responses", report.n_responses}};
  io::save_json(ws.file(phased(phase, "alpha.json")), out);
  return out;
}

json study_filter(const Workspace& ws, const PipelineConfig& cfg) {
  cfg.validate();
  const auto cands = load_candidates(ws, kCurated, "pools import");
  const auto files = load_study(ws, 1);
  const auto set = load_responses(ws, cfg, 1, files);
  // Any gate-passing label counts in Study 1; there is no annotation floor.
  const auto agg = ratings::aggregate_sentiment(set, files.catalog, 1);
  select::Study1Sentiments by_text;
  for (const auto& [id, s] : agg.sentiments) {
    by_text[files.catalog.at(id).display_text()] = s.mean_label;
  }
  const auto result = select::filter_by_study1(cands, by_text, cfg.select);
  io::save_json(ws.file(kSurvivors), io::candidates_to_json(result.survivors));
  return {{"stage", "study filter"},
          {"candidates", cands.size()},
          {"survivors", result.survivors.size()},
          {"discarded", result.discarded},
          {"excluded_participants",
           std::count_if(set.gate.begin(), set.gate.end(),
                         [](const auto& g) { return !g.second.pass; })}};
}

json ratings_compute(const Workspace& ws, const PipelineConfig& cfg) {
  cfg.validate();
  const auto cands = load_candidates(ws, kSurvivors, "study filter");
  const auto files = load_study(ws, 2);
  const auto set = load_responses(ws, cfg, 2, files);
  const auto agg = ratings::aggregate_sentiment(set, files.catalog, cfg.study.min_annotations);
  const auto rated = ratings::compute_ratings(agg.sentiments, cands, cfg.ratings);

  io::save_json(ws.file(kSentiments), io::sentiments_to_json(agg.sentiments));
  save_text(ws, kRatings, ratings::ratings_csv(rated));
  json sizes = json::object();
  for (auto v : ratings::kAllVariants) {
    const auto values = ratings::to_variant(rated, v);
    save_text(ws, std::string("variant_") + ratings::to_string(v) + ".csv",
              ratings::variant_csv(values));
    sizes[ratings::to_string(v)] = values.size();
  }
  std::size_t flagged = 0, excl_a = 0, excl_b = 0;
  for (const auto& [_, s] : agg.sentiments) flagged += s.flagged_ungrammatical;
  for (const auto& r : rated) {
    excl_a += r.excluded_A;
    excl_b += r.excluded_B;
  }
  return {{"stage", "ratings compute"},
          {"candidates", cands.size()},
          {"rows", rated.size()},
          {"items_rated", agg.sentiments.size()},
          {"items_below_min_annotations", agg.omitted.size()},
          {"items_flagged", flagged},
          {"excluded_A", excl_a},
          {"excluded_B", excl_b},
          {"variant_sizes", sizes}};
}

ModelSpec parse_model_spec(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw Error(ErrorCode::Config, "expected name=path, got '" + arg + "'");
  }
  return {arg.substr(0, eq), arg.substr(eq + 1), std::nullopt};
}

json eval_run(const Workspace& ws, const PipelineConfig& cfg,
              const std::vector<ModelSpec>& models) {
  cfg.validate();
  ws.require(kRatings, "ratings compute");
  const auto cands = load_candidates(ws, kSurvivors, "study filter");
  const auto human = io::sentiments_from_json(
      io::load_json(ws.require(kSentiments, "ratings compute")));
  if (models.empty()) throw Error(ErrorCode::Config, "eval run needs at least one --model");

  std::optional<LoadedCorpus> loaded;
  eval::EvalInputs inputs{&cands, &human, cfg.ratings, cfg.model_sentiment,
                          cfg.top_threshold};
  json reports = json::array();
  for (const auto& m : models) {
    if (!fs::exists(m.predictions)) {
      throw Error(ErrorCode::MissingInput, "missing predictions " + m.predictions.string());
    }
    const auto avg = eval::seed_average(eval::read_predictions(m.predictions, m.name));
    auto report = eval::evaluate_model(m.name, avg, inputs);
    if (m.sst_predictions) {
      if (!loaded) loaded = load_corpus(ws);
      const auto sst = eval::seed_average(eval::read_predictions(*m.sst_predictions, m.name));
      std::map<std::string, int> preds, labels;
      for (const auto& [id, p] : sst) {
        std::int64_t pid = 0;
        const auto* rec = text::parse_int(id, pid) ? loaded->corpus.find_phrase(pid) : nullptr;
        if (!rec) throw Error(ErrorCode::Validation, "SST prediction for unknown phrase " + id);
        preds[id] = p.argmax_class;
        labels[id] = eval::sst7_convert(rec->sst_value);
      }
      report.f1_sst = eval::macro_f1(preds, labels);
    }
    reports.push_back(io::eval_report_to_json(report));
  }
  json out = {{"stage", "eval run"},
              {"model_sentiment",
               cfg.model_sentiment == eval::SentimentMode::Expectation ? "expectation"
                                                                       : "argmax"},
              {"top_threshold", cfg.top_threshold},
              {"models", reports}};
  io::save_json(ws.file("eval_report.json"), out);
  return out;
}

json analyze(const Workspace& ws, const PipelineConfig& cfg,
             const std::optional<fs::path>& figurative) {
  cfg.validate();
  ws.require(kRatings, "ratings compute");
  const auto cands = load_candidates(ws, kSurvivors, "study filter");
  const auto human = io::sentiments_from_json(
      io::load_json(ws.require(kSentiments, "ratings compute")));
  const auto rated = ratings::compute_ratings(human, cands, cfg.ratings);

  std::vector<select::PhraseId> ids;
  for (const auto& c : cands) ids.push_back(c.phrase_id);
  analysis::FigurativeTags tags;
  if (figurative) {
    if (!fs::exists(*figurative)) {
      throw Error(ErrorCode::MissingInput, "missing figurative tags " + figurative->string());
    }
    tags = analysis::load_figurative_tags(*figurative, ids);
  }
  const auto meta = analysis::candidate_meta(cands, tags.tags);

  json variants = json::object();
  for (auto v : {ratings::Variant::MaxAbs, ratings::Variant::AllAbs}) {
    const auto values = ratings::to_variant(rated, v);
    json per_grouping = json::object();
    for (auto g : analysis::kAllGroupings) {
      if (g == analysis::Grouping::Figurative && !figurative) continue;
      const auto groups = analysis::group_stats(values, meta, g, cfg.polarity);
      save_text(ws,
                std::string("analysis_") + ratings::to_string(v) + "_" +
                    analysis::to_string(g) + ".csv",
                analysis::groups_csv(groups));
      json rows = json::array();
      for (const auto& s : groups) {
        rows.push_back({{"key", s.key}, {"n", s.n}, {"mean", s.mean},
                        {"median", s.median}, {"q1", s.q1}, {"q3", s.q3},
                        {"min", s.min}, {"max", s.max}});
      }
      per_grouping[analysis::to_string(g)] = std::move(rows);
    }
    variants[ratings::to_string(v)] = std::move(per_grouping);
  }
  json out = {{"stage", "analyze"},
              {"candidates", cands.size()},
              {"polarity_thresholds",
               {{"neutral_low", cfg.polarity.neutral_low},
                {"neutral_high", cfg.polarity.neutral_high},
                {"note", "sign thresholds are a configured choice, not an observed property"}}},
              {"figurative_warnings", tags.warnings},
              {"variants", variants}};
  io::save_json(ws.file("analysis.json"), out);
  out.erase("variants");
  return out;
}

}  // namespace noncomp::pipeline
