#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noncomp/config.hpp"
#include "noncomp/error.hpp"
#include "noncomp/pipeline.hpp"
#include "noncomp/service.hpp"

namespace {

using noncomp::pipeline::json;

noncomp::service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int exit_code(noncomp::ErrorCode code) {
  switch (code) {
    case noncomp::ErrorCode::MissingInput: return 3;
    case noncomp::ErrorCode::Config: return 4;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentiment non-compositionality pipeline"};
  app.require_subcommand(1);

  std::string workspace = ".";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--workspace,-w", workspace, "Workspace directory")->capture_default_str();
  app.add_option("--config,-c", config_path, "JSON config file");
  app.add_option("--seed", seed, "Overrides the config seed");

  // Each registered action runs after parsing and returns the stage summary.
  std::function<json(const noncomp::pipeline::Workspace&, const noncomp::PipelineConfig&)> action;

  auto* corpus = app.add_subcommand("corpus", "Corpus ingestion");
  corpus->require_subcommand(1);
  auto* validate = corpus->add_subcommand("validate", "Parse and check the corpus inputs");
  std::string corpus_dir;
  noncomp::pipeline::CorpusInputs inputs;
  validate->add_option("--corpus-dir", corpus_dir,
                       "Directory with the SST-layout files and sidecar.tsv");
  validate->add_option("--sentences", inputs.sentences);
  validate->add_option("--trees", inputs.trees);
  validate->add_option("--dictionary", inputs.dictionary);
  validate->add_option("--sentiment", inputs.sentiment);
  validate->add_option("--raw", inputs.raw_annotations);
  validate->add_option("--sidecar", inputs.sidecar);
  validate->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      auto in = corpus_dir.empty() ? noncomp::pipeline::CorpusInputs{}
                                   : noncomp::pipeline::CorpusInputs::in_dir(corpus_dir);
      auto pick = [](std::filesystem::path& dst, const std::filesystem::path& flag) {
        if (!flag.empty()) dst = flag;
      };
      pick(in.sentences, inputs.sentences);
      pick(in.trees, inputs.trees);
      pick(in.dictionary, inputs.dictionary);
      pick(in.sentiment, inputs.sentiment);
      pick(in.raw_annotations, inputs.raw_annotations);
      pick(in.sidecar, inputs.sidecar);
      return noncomp::pipeline::corpus_validate(ws, cfg, in);
    };
  });

  auto* sel = app.add_subcommand("select", "Candidate selection");
  sel->require_subcommand(1);
  sel->add_subcommand("candidates", "Find candidate phrases and admissible subphrases")
      ->callback([&] { action = noncomp::pipeline::select_candidates; });

  auto* pools = app.add_subcommand("pools", "Control pools and curation");
  pools->require_subcommand(1);
  pools->add_subcommand("build", "Sample control pools")
      ->callback([&] { action = noncomp::pipeline::pools_build; });
  bool auto_keep = false;
  auto* pexport = pools->add_subcommand("export", "Write the curation sheet");
  pexport->add_flag("--auto-keep", auto_keep,
                    "Pre-mark the first controls per side as kept (dry runs)");
  pexport->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      return noncomp::pipeline::pools_export(ws, cfg, auto_keep);
    };
  });
  std::string sheet;
  auto* pimport = pools->add_subcommand("import", "Apply an edited curation sheet");
  pimport->add_option("--sheet", sheet, "Curation sheet (default: workspace curation.tsv)");
  pimport->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      std::optional<std::filesystem::path> p;
      if (!sheet.empty()) p = sheet;
      return noncomp::pipeline::pools_import(ws, cfg, p);
    };
  });

  auto* study = app.add_subcommand("study", "Annotation studies");
  study->require_subcommand(1);
  int phase = 1;
  auto* gen = study->add_subcommand("gen", "Generate items, practice set and batches");
  gen->add_option("--phase", phase)->required()->check(CLI::IsMember({1, 2}));
  gen->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      return noncomp::pipeline::study_gen(ws, cfg, phase);
    };
  });
  study->add_subcommand("filter", "Keep candidates whose controls pass Study 1")
      ->callback([&] { action = noncomp::pipeline::study_filter; });
  auto* alpha = study->add_subcommand("alpha", "Inter-annotator agreement");
  alpha->add_option("--phase", phase)->required()->check(CLI::IsMember({1, 2}));
  alpha->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      return noncomp::pipeline::study_alpha(ws, cfg, phase);
    };
  });
  auto* gate = study->add_subcommand("gate", "Practice quality gate per participant");
  gate->add_option("--phase", phase)->required()->check(CLI::IsMember({1, 2}));
  gate->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      return noncomp::pipeline::study_gate(ws, cfg, phase);
    };
  });

  auto* rat = app.add_subcommand("ratings", "Non-compositionality ratings");
  rat->require_subcommand(1);
  rat->add_subcommand("compute", "Aggregate Study 2 and compute ratings")
      ->callback([&] { action = noncomp::pipeline::ratings_compute; });

  auto* ev = app.add_subcommand("eval", "Model evaluation");
  ev->require_subcommand(1);
  std::vector<std::string> model_args;
  std::vector<std::string> sst_args;
  auto* run = ev->add_subcommand("run", "Score model predictions against human ratings");
  run->add_option("--model", model_args, "name=predictions.tsv (repeatable)")->required();
  run->add_option("--sst", sst_args, "name=sst_predictions.tsv keyed by phrase id");
  run->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      std::vector<noncomp::pipeline::ModelSpec> models;
      for (const auto& a : model_args) models.push_back(noncomp::pipeline::parse_model_spec(a));
      for (const auto& a : sst_args) {
        auto spec = noncomp::pipeline::parse_model_spec(a);
        auto it = std::find_if(models.begin(), models.end(),
                               [&](const auto& m) { return m.name == spec.name; });
        if (it == models.end()) {
          throw noncomp::Error(noncomp::ErrorCode::Config,
                               "--sst names unknown model " + spec.name);
        }
        it->sst_predictions = spec.predictions;
      }
      return noncomp::pipeline::eval_run(ws, cfg, models);
    };
  });

  std::string figurative;
  auto* an = app.add_subcommand("analyze", "Grouped rating statistics");
  an->add_option("--figurative", figurative, "candidate_id<TAB>0/1 tag file");
  an->callback([&] {
    action = [&](const auto& ws, const auto& cfg) {
      std::optional<std::filesystem::path> p;
      if (!figurative.empty()) p = figurative;
      return noncomp::pipeline::analyze(ws, cfg, p);
    };
  });

  std::string study_dir, log_path, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--study-dir", study_dir, "Directory with *_batches.json (default: workspace)");
  serve->add_option("--log-path", log_path, "Event log (default: workspace events.jsonl)");
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->callback([&] {
    action = [&](const auto& ws, const auto& cfg) -> json {
      const auto dir = study_dir.empty() ? ws.dir() : std::filesystem::path(study_dir);
      auto studies = noncomp::service::load_study_dir(dir);
      if (studies.empty()) {
        throw noncomp::Error(noncomp::ErrorCode::MissingInput,
                             "no *_batches.json in " + dir.string() +
                                 "; produce them with `study gen` first");
      }
      const auto log = log_path.empty() ? ws.file("events.jsonl")
                                        : std::filesystem::path(log_path);
      noncomp::service::Service svc(std::move(studies), log, cfg.study.gate);
      noncomp::service::HttpServer server(svc);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << json{{"stage", "serve"}, {"host", host}, {"port", bound},
                        {"log", log.string()}}.dump()
                << std::endl;
      server.listen();
      g_server = nullptr;
      return json{{"stage", "serve"}, {"stopped", true}};
    };
  });

  CLI11_PARSE(app, argc, argv);

  try {
    noncomp::PipelineConfig cfg;
    if (!config_path.empty()) cfg = noncomp::load_config(config_path);
    if (seed) cfg.seed = *seed;
    noncomp::pipeline::Workspace ws(workspace);
    std::cout << action(ws, cfg).dump() << std::endl;
  } catch (const noncomp::Error& e) {
    std::cerr << json{{"error", noncomp::to_string(e.code())}, {"message", e.what()}}.dump()
              << std::endl;
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
