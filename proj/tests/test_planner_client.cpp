#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "r2x/planner_client.hpp"
#include "r2x/scenario.hpp"
#include "support.hpp"

using namespace r2x;
using nlohmann::json;

namespace {

// A hub state with one robot and a couple of known objects, plus a goal the
// built-in planner can satisfy directly.
struct Fixture {
  GridWorld world;
  SemanticState state;
  GoalCondition goal;

  Fixture() {
    world = test::two_rooms();
    test::put_robot(world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
    test::put_object(world, "apple_1", "Apple", {2, 0});
    test::put_object(world, "table_1", "Table", {1, 5});
    state = test::known_state(world);
    Predicate p;
    p.kind = PredKind::ObjectInReceptacle;
    p.object = "apple_1";
    p.receptacle = "table_1";
    goal = {p};
  }
};

std::string stub_path() {
  const char* p = std::getenv("R2X_STUB");
  REQUIRE_MESSAGE(p != nullptr, "R2X_STUB must point at the planner stub binary");
  return p;
}

struct EnvGuard {
  std::string key;
  EnvGuard(const std::string& k, const std::string& v) : key(k) {
    setenv(k.c_str(), v.c_str(), 1);
  }
  ~EnvGuard() { unsetenv(key.c_str()); }
};

}  // namespace

TEST_CASE("planner client: empty endpoint answers in process") {
  Fixture f;
  PlannerClient local({});
  PlanOutcome got = local.request_plan(f.state, f.goal, f.world, "tidy up");
  PlanOutcome want = baseline_plan(f.state, f.goal, f.world, "tidy up", 32);
  REQUIRE(got.ok);
  CHECK(plan_to_json(got.plan) == plan_to_json(want.plan));
  CHECK(got.prompt_tokens == want.prompt_tokens);
  CHECK(got.completion_tokens == want.completion_tokens);
  CHECK(got.prompt_tokens > 0);
}

TEST_CASE("planner client: subprocess relay round trip") {
  Fixture f;
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  PlannerClient client(cfg);
  PlanOutcome got = client.request_plan(f.state, f.goal, f.world, "tidy up");
  REQUIRE(got.ok);
  REQUIRE(got.plan.nodes.size() == 1);
  const ActionNode& n = got.plan.nodes.begin()->second;
  CHECK(n.kind == NodeKind::FetchAndPlace);
  CHECK(n.params.at("object") == "apple_1");
  CHECK(n.params.at("receptacle") == "table_1");
}

TEST_CASE("planner client: canned plan from the stub") {
  Fixture f;
  EnvGuard mode("R2X_STUB_MODE", "plan");
  EnvGuard plan("R2X_STUB_PLAN",
                R"({"format":"plan/1","nodes":[{"id":"n01","action":"navigate_to",)"
                R"("params":{"room":"room_2"},"r_pref":"r1"}],"edges":[]})");
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  REQUIRE(got.ok);
  REQUIRE(got.plan.nodes.count("n01"));
  CHECK(got.plan.nodes.at("n01").kind == NodeKind::NavigateTo);
  CHECK(got.plan.nodes.at("n01").r_pref == "r1");
  CHECK(got.completion_tokens > 0);
}

TEST_CASE("planner client: gibberish response is a schema error") {
  Fixture f;
  EnvGuard mode("R2X_STUB_MODE", "malformed");
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  CHECK_FALSE(got.ok);
  CHECK(got.error.rfind("schema:", 0) == 0);
}

TEST_CASE("planner client: a cyclic plan parses, judging it is not our job") {
  Fixture f;
  EnvGuard mode("R2X_STUB_MODE", "cyclic");
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  REQUIRE(got.ok);
  CHECK(got.plan.nodes.size() == 2);
  // the dependency check happens at install time, not in the transport
  PlanValidation v = validate_plan(got.plan, f.state);
  CHECK_FALSE(v.ok);
}

TEST_CASE("planner client: dead subprocess exhausts retries") {
  Fixture f;
  EnvGuard mode("R2X_STUB_MODE", "die");
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  CHECK_FALSE(got.ok);
  CHECK(got.error.rfind("transport:", 0) == 0);
}

TEST_CASE("planner client: missing binary is a transport error") {
  Fixture f;
  PlannerConfig cfg;
  cfg.endpoint = "cmd:/nonexistent/planner";
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  CHECK_FALSE(got.ok);
  CHECK(got.error.rfind("transport:", 0) == 0);
}

TEST_CASE("planner client: flaky transport succeeds within the retry budget") {
  Fixture f;
  const std::string counter = "/tmp/r2x_stub_counter.txt";
  std::remove(counter.c_str());
  EnvGuard mode("R2X_STUB_MODE", "flaky");
  EnvGuard state("R2X_STUB_STATE", counter);
  EnvGuard fails("R2X_STUB_FAILS", "2");
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  cfg.retries = 2;  // three attempts in total, the third lands
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  REQUIRE(got.ok);
  CHECK(got.plan.nodes.size() == 1);
  std::remove(counter.c_str());
}

TEST_CASE("planner client: flaky transport beyond the budget stays failed") {
  Fixture f;
  const std::string counter = "/tmp/r2x_stub_counter.txt";
  std::remove(counter.c_str());
  EnvGuard mode("R2X_STUB_MODE", "flaky");
  EnvGuard state("R2X_STUB_STATE", counter);
  EnvGuard fails("R2X_STUB_FAILS", "5");
  PlannerConfig cfg;
  cfg.endpoint = "cmd:" + stub_path();
  cfg.retries = 2;
  PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "go");
  CHECK_FALSE(got.ok);
  CHECK(got.error.rfind("transport:", 0) == 0);
  std::remove(counter.c_str());
}

TEST_CASE("planner client: http round trip, auth header and error paths") {
  Fixture f;
  httplib::Server server;
  std::string seen_auth;
  int hits_500 = 0;
  server.Post("/plan", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    json body = json::parse(req.body);
    SemanticState s = parse_state(body.at("state").dump());
    GoalCondition goal = goal_from_json(body.at("goal"));
    PlanOutcome out = baseline_plan(s, goal, GridWorld{}, body.value("task", ""), 32);
    res.set_content(plan_to_json(out.plan).dump(), "application/json");
  });
  server.Post("/broken", [&](const httplib::Request&, httplib::Response& res) {
    ++hits_500;
    res.status = 500;
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  SUBCASE("success with bearer token") {
    PlannerConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/plan";
    cfg.api_key = "sk-test-123";
    PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "tidy");
    REQUIRE(got.ok);
    CHECK(got.plan.nodes.size() == 1);
    CHECK(seen_auth == "Bearer sk-test-123");
  }

  SUBCASE("server errors burn the retry budget") {
    PlannerConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
    cfg.retries = 2;
    PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "tidy");
    CHECK_FALSE(got.ok);
    CHECK(got.error.rfind("transport:", 0) == 0);
    CHECK(hits_500 == 3);
  }

  SUBCASE("nobody listening") {
    server.stop();
    worker.join();
    PlannerConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/plan";
    cfg.retries = 0;
    PlanOutcome got = PlannerClient(cfg).request_plan(f.state, f.goal, f.world, "tidy");
    CHECK_FALSE(got.ok);
    CHECK(got.error.rfind("transport:", 0) == 0);
  }

  if (worker.joinable()) {
    server.stop();
    worker.join();
  }
}

TEST_CASE("planner client: endpoint from the environment") {
  EnvGuard ep("R2X_PLANNER_ENDPOINT", "http://example.invalid/plan");
  EnvGuard key("R2X_PLANNER_API_KEY", "sk-zzz");
  PlannerConfig cfg = planner_config_from_env({});
  CHECK(cfg.endpoint == "http://example.invalid/plan");
  CHECK(cfg.api_key == "sk-zzz");
}
