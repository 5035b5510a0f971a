#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "noncomp/service.hpp"
#include "tempdir.hpp"

using namespace noncomp;
using nlohmann::json;

namespace {

study::StudyDefinition tiny_study() {
  study::StudyDefinition d;
  d.study_id = "study2";
  d.phase = 2;
  for (int r = 0; r < 7; ++r) {
    d.practice.push_back({"p2_" + std::to_string(r + 1), {"practice"}, false, r});
  }
  d.batches.push_back({{"c1_AB", {"a", "b"}, true, std::nullopt},
                       {"c1_A1", {"x", "b"}, true, std::nullopt}});
  return d;
}

}  // namespace

TEST_CASE("HTTP endpoints drive a full session") {
  testing::TempDir dir("http");
  service::Service svc({tiny_study()}, dir / "events.jsonl");
  service::HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen(); });

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Post("/api/sessions", R"({"study_id":"study2","participant_token":"t"})",
                      "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string sid = json::parse(res->body)["session_id"];

  int answered = 0;
  for (;;) {
    res = cli.Get("/api/sessions/" + sid + "/next");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto n = json::parse(res->body);
    if (n["state"] == "done") break;
    json body{{"item_id", n["item"]["item_id"]},
              {"label", n["state"] == "practice" ? n["index"].get<int>() : 2},
              {"ungrammatical", false}};
    res = cli.Post("/api/sessions/" + sid + "/responses", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    ++answered;
  }
  CHECK(answered == 9);

  res = cli.Post("/api/sessions/" + sid + "/responses", R"({"item_id":"c1_AB","label":1})",
                 "application/json");
  REQUIRE(res);
  CHECK(res->status == 409);

  res = cli.Get("/api/admin/export?study_id=study2");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type").find("ndjson") != std::string::npos);
  CHECK(std::count(res->body.begin(), res->body.end(), '\n') == 9);

  res = cli.Get("/api/admin/progress?study_id=study2");
  REQUIRE(res);
  CHECK(json::parse(res->body)["slots"][0]["state"] == "done");
  res = cli.Get("/api/admin/progress");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = cli.Get("/api/sessions/nobody/next");
  REQUIRE(res);
  CHECK(res->status == 404);

  server.stop();
  loop.join();
}
