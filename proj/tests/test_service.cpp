#include <doctest.h>

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <thread>

#include "causal/report.hpp"
#include "causal/service.hpp"
#include "support.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen internals.
#include <httplib.h>

using namespace causal;
using testing_support::motor_document;

namespace
{

/// Service on an ephemeral loopback port over a fresh model directory.
struct LiveService
{
  std::filesystem::path dir;
  ModelStore store;
  httplib::Server server;
  int port = 0;
  std::thread thread;

  explicit LiveService(const std::string & tag)
      : dir(std::filesystem::temp_directory_path() / ("causal-service-" + tag + "-" + std::to_string(::getpid()))),
        store((std::filesystem::remove_all(dir), std::filesystem::create_directories(dir), dir))
  {
    register_routes(server, store);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~LiveService()
  {
    server.stop();
    thread.join();
    std::filesystem::remove_all(dir);
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

std::string motor_dsl()
{
  return serialize(motor_document(), Format::dsl);
}

std::string etag_hash(const httplib::Result & r)
{
  std::string v = r->get_header_value("ETag");
  return v.substr(1, v.size() - 2);
}

}  // namespace

TEST_CASE("content hash and model names")
{
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == "af63dc4c8601ec8c");
  CHECK(valid_model_name("motor-v2_1"));
  CHECK_FALSE(valid_model_name(""));
  CHECK_FALSE(valid_model_name("../etc"));
  CHECK_FALSE(valid_model_name("a b"));
  CHECK_FALSE(valid_model_name(std::string(129, 'a')));
  CHECK(is_loopback("127.0.0.1"));
  CHECK(is_loopback("localhost"));
  CHECK(is_loopback("::1"));
  CHECK_FALSE(is_loopback("0.0.0.0"));
}

TEST_CASE("model lifecycle over HTTP")
{
  LiveService svc("lifecycle");
  auto cli = svc.client();

  auto created = cli.Put("/models/motor", motor_dsl(), "text/plain");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto body = nlohmann::json::parse(created->body);
  CHECK(body["created"] == true);
  const std::string hash = body["hash"];
  CHECK(etag_hash(created) == hash);

  auto listing = cli.Get("/models");
  REQUIRE(listing);
  CHECK(nlohmann::json::parse(listing->body)["models"] ==
        nlohmann::json::parse(R"([{"name":"motor","hash":")" + hash + R"("}])"));

  auto got = cli.Get("/models/motor");
  REQUIRE(got);
  CHECK(got->status == 200);
  CHECK(etag_hash(got) == hash);
  const auto model = nlohmann::json::parse(got->body)["model"];
  CHECK(parse_model_any(model.dump()) == motor_document());

  auto dsl = cli.Get("/models/motor?format=dsl");
  REQUIRE(dsl);
  CHECK(dsl->body == motor_dsl());
  CHECK(content_hash(dsl->body) == hash);

  SUBCASE("replacing needs the current hash")
  {
    auto bare = cli.Put("/models/motor", motor_dsl(), "text/plain");
    REQUIRE(bare);
    CHECK(bare->status == 409);
    CHECK(nlohmann::json::parse(bare->body)["hash"] == hash);

    httplib::Headers stale{{"If-Match", "\"0000000000000000\""}};
    auto conflict = cli.Put("/models/motor", stale, motor_dsl(), "text/plain");
    REQUIRE(conflict);
    CHECK(conflict->status == 409);

    const ModelDocument changed = with_added_edge(motor_document(), "T_E", "MechFault", 0.5);
    httplib::Headers current{{"If-Match", "\"" + hash + "\""}};
    auto replaced = cli.Put("/models/motor", current, serialize(changed, Format::json), "application/json");
    REQUIRE(replaced);
    CHECK(replaced->status == 200);
    const std::string next = nlohmann::json::parse(replaced->body)["hash"];
    CHECK(next != hash);
    CHECK(nlohmann::json::parse(replaced->body)["created"] == false);

    auto again = cli.Put("/models/motor", current, motor_dsl(), "text/plain");
    REQUIRE(again);
    CHECK(again->status == 409);
  }

  SUBCASE("creating with If-Match is a conflict")
  {
    httplib::Headers h{{"If-Match", "\"" + hash + "\""}};
    auto r = cli.Put("/models/other", h, motor_dsl(), "text/plain");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(nlohmann::json::parse(r->body)["hash"].is_null());
  }
}

TEST_CASE("queries match the shared report builders byte for byte")
{
  LiveService svc("queries");
  auto cli = svc.client();
  REQUIRE(cli.Put("/models/motor", motor_dsl(), "text/plain")->status == 201);

  auto analyze = cli.Post("/models/motor/analyze", "", "application/json");
  REQUIRE(analyze);
  CHECK(analyze->status == 200);
  CHECK(analyze->body == render(analysis_report(motor_document(), {})));
  const auto report = nlohmann::json::parse(analyze->body);
  CHECK(report["paths"]["causal"].size() == 3);
  CHECK(report["paths"]["biasing"].size() == 2);
  CHECK(report["adjustment"]["sets"][0]["members"] == nlohmann::json::parse(R"(["T_E","V_s"])"));

  auto dsep = cli.Post("/models/motor/dsep", R"({"x":"V_s","y":"T_E","given":[]})", "application/json");
  REQUIRE(dsep);
  CHECK(dsep->status == 200);
  CHECK(nlohmann::json::parse(dsep->body)["separated"] == true);
  CHECK(dsep->body == render(separation_json(testing_support::motor(), {"V_s", "T_E", {}})));

  auto open = cli.Post("/models/motor/dsep", R"({"x":"V_s","y":"T_s","given":["T_E"]})", "application/json");
  REQUIRE(open);
  CHECK(nlohmann::json::parse(open->body)["separated"] == false);

  auto impl = cli.Post("/models/motor/implications", R"({"max_given":3})", "application/json");
  REQUIRE(impl);
  CHECK(impl->status == 200);
  const auto ij = nlohmann::json::parse(impl->body);
  CHECK(ij["statements"].size() == 6);
  CHECK(ij["asserted"].size() == 5);
  for (const auto & a : ij["asserted"]) CHECK(a["holds"] == true);

  auto req = cli.Post("/models/motor/requirements", "{}", "application/json");
  REQUIRE(req);
  CHECK(req->status == 200);
  CHECK(req->body == render(requirements_json(motor_document(), testing_support::motor(), {})));

  auto dot = cli.Get("/models/motor/export?format=dot");
  REQUIRE(dot);
  CHECK(dot->status == 200);
  CHECK(dot->body == to_dot(testing_support::motor(), "motor"));
  CHECK(dot->body.find("fillcolor=gray") != std::string::npos);

  auto js = cli.Get("/models/motor/export?format=json");
  REQUIRE(js);
  CHECK(parse_model_any(js->body) == motor_document());

  auto ds = cli.Get("/models/motor/export?format=dsl");
  REQUIRE(ds);
  CHECK(parse_model_any(ds->body) == motor_document());

  auto bad_format = cli.Get("/models/motor/export?format=png");
  REQUIRE(bad_format);
  CHECK(bad_format->status == 400);
}

TEST_CASE("analysis is independent of declaration order")
{
  LiveService svc("order");
  auto cli = svc.client();
  REQUIRE(cli.Put("/models/a", motor_dsl(), "text/plain")->status == 201);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 5; ++i) {
    ModelDocument shuffled = motor_document();
    std::shuffle(shuffled.nodes.begin(), shuffled.nodes.end(), rng);
    std::shuffle(shuffled.edges.begin(), shuffled.edges.end(), rng);
    const std::string name = "b" + std::to_string(i);
    REQUIRE(cli.Put("/models/" + name, serialize(shuffled, Format::dsl), "text/plain")->status == 201);
    const auto a = cli.Post("/models/a/analyze", "{}", "application/json");
    const auto b = cli.Post("/models/" + name + "/analyze", "{}", "application/json");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->body == b->body);
  }
}

TEST_CASE("request errors")
{
  LiveService svc("errors");
  auto cli = svc.client();
  REQUIRE(cli.Put("/models/motor", motor_dsl(), "text/plain")->status == 201);

  auto parse = cli.Put("/models/broken", "model \"x\" {\n  node A {\n  edge A => B\n}\n", "text/plain");
  REQUIRE(parse);
  CHECK(parse->status == 400);
  const auto pj = nlohmann::json::parse(parse->body);
  REQUIRE(pj["diagnostics"].size() == 1);
  CHECK(pj["diagnostics"][0]["line"].get<int>() > 0);

  auto cyclic = cli.Put("/models/loop",
                        "model \"loop\" {\n  node A {}\n  node B {}\n  node C {}\n"
                        "  edge A -> B {}\n  edge B -> C {}\n  edge C -> A {}\n}\n",
                        "text/plain");
  REQUIRE(cyclic);
  CHECK(cyclic->status == 400);
  const auto cycle = nlohmann::json::parse(cyclic->body)["cycle"];
  REQUIRE(cycle.size() == 4);
  CHECK(cycle.front() == cycle.back());
  CHECK(cli.Get("/models/loop")->status == 404);

  CHECK(cli.Put("/models/bad%20name", motor_dsl(), "text/plain")->status == 400);
  CHECK(cli.Get("/models/nope")->status == 404);
  CHECK(cli.Post("/models/nope/analyze", "{}", "application/json")->status == 404);

  auto unknown_node = cli.Post("/models/motor/dsep", R"({"x":"V_s","y":"Nope"})", "application/json");
  REQUIRE(unknown_node);
  CHECK(unknown_node->status == 400);
  CHECK(nlohmann::json::parse(unknown_node->body)["subject"] == "Nope");

  CHECK(cli.Post("/models/motor/dsep", R"({"x":"V_s"})", "application/json")->status == 400);
  CHECK(cli.Post("/models/motor/dsep", R"({"x":"V_s","y":"T_E","extra":1})", "application/json")->status == 400);
  CHECK(cli.Post("/models/motor/analyze", "[1,2]", "application/json")->status == 400);
  CHECK(cli.Post("/models/motor/analyze", "{not json", "application/json")->status == 400);
  CHECK(cli.Post("/models/motor/analyze", R"({"exposure":"Nope"})", "application/json")->status == 400);
}

TEST_CASE("concurrent readers see complete snapshots")
{
  LiveService svc("concurrent");
  auto cli = svc.client();
  auto first = cli.Put("/models/motor", motor_dsl(), "text/plain");
  REQUIRE(first->status == 201);
  const std::string h1 = nlohmann::json::parse(first->body)["hash"];
  const std::string other = serialize(with_added_edge(motor_document(), "T_E", "MechFault", 0.5), Format::dsl);
  const std::string h2 = content_hash(other);

  std::atomic<bool> torn{false};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      auto c = svc.client();
      for (int i = 0; i < 30; ++i) {
        auto r = c.Get("/models/motor?format=dsl");
        if (!r || r->status != 200) continue;
        const std::string h = content_hash(r->body);
        if (h != h1 && h != h2) torn = true;
        if (etag_hash(r) != h) torn = true;
      }
    });
  }
  std::string current = h1;
  for (int i = 0; i < 20; ++i) {
    const std::string & text = i % 2 == 0 ? other : motor_dsl();
    httplib::Headers h{{"If-Match", "\"" + current + "\""}};
    auto r = cli.Put("/models/motor", h, text, "text/plain");
    REQUIRE(r->status == 200);
    current = nlohmann::json::parse(r->body)["hash"];
  }
  for (auto & r : readers) r.join();
  CHECK_FALSE(torn.load());
}
