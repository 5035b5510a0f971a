#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "noncomp/pipeline.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace noncomp;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::filesystem::path& ws, const std::string& args) {
  const auto out = ws / ".cli_out";
  const auto err = ws / ".cli_err";
  const auto cmd = std::string(NONCOMP_CLI) + " -w '" + ws.string() + "' " + args + " > '" +
                   out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

void ok(const std::filesystem::path& ws, const std::string& args) {
  const auto r = cli(ws, args);
  INFO(args << "\n" << r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(nlohmann::json::parse(r.out).is_object());
}

}  // namespace

TEST_CASE("missing prerequisites and bad configs map to exit codes") {
  testing::TempDir dir("cli");
  auto r = cli(dir.path(), "eval run --model m=" + (dir / "m.tsv").string());
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("ratings compute") != std::string::npos);
  CHECK(nlohmann::json::parse(r.err)["error"] == "missing-input");

  std::ofstream(dir / "cfg.json") << R"({"select": {"bogus": 1}})";
  r = cli(dir.path(), "-c '" + (dir / "cfg.json").string() + "' select candidates");
  CHECK(r.exit_code == 4);

  r = cli(dir.path(), "study gen --phase 3");
  CHECK(r.exit_code != 0);
  CHECK(cli(dir.path(), "--help").exit_code == 0);
}

TEST_CASE("the CLI reproduces the in-process pipeline byte for byte") {
  testing::TempDir data("cli-data");
  testing::TempDir by_cli("cli-ws");
  testing::TempDir in_proc("cli-lib");
  const auto corpus = synthetic::write_corpus(data.path(), {});
  synthetic::Annotators people;
  people.spammer_slots = {2};
  const PipelineConfig cfg;

  synthetic::run_pipeline(pipeline::Workspace{in_proc.path()}, corpus, cfg, people);

  const pipeline::Workspace ws{by_cli.path()};
  ok(ws.dir(), "corpus validate --corpus-dir '" + data.path().string() + "'");
  ok(ws.dir(), "select candidates");
  ok(ws.dir(), "pools build");
  ok(ws.dir(), "pools export --auto-keep");
  ok(ws.dir(), "pools import");
  ok(ws.dir(), "study gen --phase 1");
  synthetic::simulate_responses(ws, 1, corpus, people);
  ok(ws.dir(), "study gate --phase 1");
  ok(ws.dir(), "study alpha --phase 1");
  ok(ws.dir(), "study filter");
  ok(ws.dir(), "study gen --phase 2");
  synthetic::simulate_responses(ws, 2, corpus, people);
  ok(ws.dir(), "study gate --phase 2");
  ok(ws.dir(), "study alpha --phase 2");
  ok(ws.dir(), "ratings compute");
  synthetic::write_predictions(ws, corpus, ws.file("model_compositional.tsv"), cfg.seed);
  synthetic::write_sst_predictions(ws, ws.file("model_compositional_sst.tsv"), cfg.seed);
  ok(ws.dir(), "eval run --model compositional='" + ws.file("model_compositional.tsv").string() +
                 "' --sst compositional='" + ws.file("model_compositional_sst.tsv").string() +
                 "'");
  ok(ws.dir(), "analyze --figurative '" + corpus.figurative_tags.string() + "'");

  std::size_t compared = 0;
  for (const auto& e : std::filesystem::directory_iterator(in_proc.path())) {
    const auto name = e.path().filename();
    CAPTURE(name.string());
    REQUIRE(std::filesystem::exists(by_cli / name));
    CHECK(slurp(e.path()) == slurp(by_cli / name));
    ++compared;
  }
  CHECK(compared > 20);
}
