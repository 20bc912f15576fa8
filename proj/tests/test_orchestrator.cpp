#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2x/orchestrator.hpp"
#include "support.hpp"

using namespace r2x;
using nlohmann::json;

namespace {

Scenario two_room_scenario() {
  Scenario sc;
  sc.scene_seed = 3;
  sc.failure_seed = 5;
  sc.world = test::two_rooms();
  sc.room_rects = {{"room_1", {{0, 0, 2, 5}}}, {"room_2", {{3, 0, 5, 5}}}};
  sc.doors = {{2, 1, 0}};
  return sc;
}

EpisodeConfig quiet_config() {
  EpisodeConfig cfg;
  cfg.protocol = Protocol::R2R;
  cfg.max_ticks = 400;
  return cfg;
}

std::vector<json> read_trace(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.is_open());
  std::vector<json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(json::parse(line));
  }
  return lines;
}

}  // namespace

TEST_CASE("orchestrator: explore, discover, deliver") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_object(sc.world, "table_1", "Table", {1, 5});
  test::put_object(sc.world, "apple_1", "Apple", {5, 4});
  sc.task.description = "bring the apple to the table";
  Predicate p;
  p.kind = PredKind::ObjectInReceptacle;
  p.object = "apple_1";
  p.receptacle = "table_1";
  sc.task.goal = {p};

  Orchestrator o(sc, quiet_config());
  EpisodeResult r = o.run();

  CHECK(r.success_truth);
  CHECK(r.success_belief);
  CHECK(r.fail_count == 0);
  // nothing is known at the start, so at least one explore plan precedes the
  // fetch plan
  CHECK(r.planner_calls >= 2);
  CHECK(r.token_proxy > 0);
  CHECK(r.action_steps > 10);
  CHECK(r.path_length_m > 0.0);
  CHECK(r.ticks < 400);
  CHECK(o.world().objects.at("apple_1").rec == std::optional<ObjectId>("table_1"));
}

TEST_CASE("orchestrator: satisfied goal ends before any planning") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  Predicate p;
  p.kind = PredKind::RobotInRoom;
  p.robot = "r1";
  p.room = "room_1";
  sc.task.goal = {p};

  Orchestrator o(sc, quiet_config());
  EpisodeResult r = o.run();

  CHECK(r.success_truth);
  CHECK(r.success_belief);
  CHECK(r.planner_calls == 0);
  CHECK(r.action_steps == 0);
  CHECK(r.ticks == 1);
}

TEST_CASE("orchestrator: navigation releases the robot at survey pitch") {
  Scenario sc = two_room_scenario();
  RobotState& r1 = test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE);
  r1.skills = test::all_skills();
  r1.pose.phi = 25.0;
  Predicate p;
  p.kind = PredKind::RobotInRoom;
  p.robot = "r1";
  p.room = "room_2";
  sc.task.goal = {p};

  Orchestrator o(sc, quiet_config());
  EpisodeResult r = o.run();

  CHECK(r.success_truth);
  CHECK(r.success_belief);
  CHECK(r.planner_calls == 1);
  CHECK(r.fail_count == 0);
  // shortest route through the doorway: (0,0) (1,0) (1,1) (2,1) (3,1)
  CHECK(r.action_steps == 4);
  const RobotState& after = o.world().robots.at("r1");
  CHECK(after.sigma == RobotStatus::IDLE);
  CHECK(after.pose.phi == doctest::Approx(0.0));
}

TEST_CASE("orchestrator: unsatisfiable skills exhaust the failure budget") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = {
      ActionKind::MoveStep, ActionKind::Rotate};
  test::put_object(sc.world, "table_1", "Table", {1, 5});
  test::put_object(sc.world, "apple_1", "Apple", {2, 3});
  Predicate p;
  p.kind = PredKind::ObjectInReceptacle;
  p.object = "apple_1";
  p.receptacle = "table_1";
  sc.task.goal = {p};

  EpisodeConfig cfg = quiet_config();
  Orchestrator o(sc, cfg);
  EpisodeResult r = o.run();

  CHECK_FALSE(r.success_truth);
  CHECK_FALSE(r.success_belief);
  // every fetch plan is rejected (nobody can Pickup), one strike per attempt
  CHECK(r.fail_count == cfg.max_fails);
  CHECK(o.hub_fails(0) == cfg.max_fails);
  CHECK(r.ticks < 400);
}

TEST_CASE("orchestrator: stall horizon ends a starved episode") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  ObjectState& fridge = test::put_object(sc.world, "fridge_1", "Fridge", {4, 4});
  fridge.props.set(kIsOpen, 0);
  ObjectState& apple = test::put_object(sc.world, "apple_1", "Apple", {4, 4});
  apple.rec = "fridge_1";
  Predicate p;
  p.kind = PredKind::PropertyIs;
  p.object = "apple_1";
  p.prop = kIsSliced;
  p.value = 1;
  sc.task.goal = {p};

  EpisodeConfig cfg = quiet_config();
  cfg.max_ticks = 600;
  cfg.max_fails = 50;
  cfg.stall_horizon = 12;
  Orchestrator o(sc, cfg);
  EpisodeResult r = o.run();

  // the apple hides inside the closed fridge; exploration never finds it and
  // the planner keeps coming back empty-handed
  CHECK_FALSE(r.success_truth);
  CHECK_FALSE(r.success_belief);
  CHECK(r.ticks < 200);        // not the tick budget
  CHECK(r.fail_count >= 1);
  CHECK(r.fail_count < 50);    // not the failure budget either
}

TEST_CASE("orchestrator: scripted event moves the truth on its tick") {
  Scenario sc = two_room_scenario();
  RobotState& r1 = test::put_robot(sc.world, "r1", {0, 5}, 0.0, RobotStatus::IDLE);
  r1.skills = test::all_skills();
  test::put_object(sc.world, "apple_1", "Apple", {5, 5});
  Predicate p;
  p.kind = PredKind::RobotInRoom;
  p.robot = "r1";
  p.room = "room_2";
  sc.task.goal = {p};
  sc.events.push_back({4, "apple_1", {0, 5}, "room_1", std::nullopt});

  Orchestrator o(sc, quiet_config());
  while (o.now() < 4 && o.step()) {
  }
  REQUIRE_FALSE(o.finished());
  CHECK(o.world().objects.at("apple_1").pos->x == 5);
  CHECK(o.world().objects.at("apple_1").pos->y == 5);

  o.step();  // runs tick 4
  CHECK(o.world().objects.at("apple_1").pos->x == 0);
  CHECK(o.world().objects.at("apple_1").pos->y == 5);
  CHECK(o.world().objects.at("apple_1").room == "room_1");
}

TEST_CASE("orchestrator: serialized slicing keeps the knife in one hand") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_robot(sc.world, "r2", {0, 5}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_object(sc.world, "knife_1", "Knife", {1, 3});
  test::put_object(sc.world, "apple_1", "Apple", {2, 0});
  test::put_object(sc.world, "bread_1", "Bread", {2, 5});
  Predicate pa;
  pa.kind = PredKind::PropertyIs;
  pa.object = "apple_1";
  pa.prop = kIsSliced;
  pa.value = 1;
  Predicate pb = pa;
  pb.object = "bread_1";
  sc.task.goal = {pa, pb};

  Orchestrator o(sc, quiet_config());
  EpisodeResult r = o.run();

  CHECK(r.success_truth);
  CHECK(r.success_belief);
  CHECK(o.world().objects.at("apple_1").props.get(kIsSliced) == 1);
  CHECK(o.world().objects.at("bread_1").props.get(kIsSliced) == 1);
  // the knife never changes hands, whoever sliced first does both
  int holders = 0;
  for (const auto& [id, rob] : o.world().robots) {
    if (rob.inventory == std::optional<ObjectId>("knife_1")) ++holders;
  }
  CHECK(holders == 1);
}

TEST_CASE("orchestrator: tick budget truncates the episode") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_object(sc.world, "table_1", "Table", {1, 5});
  test::put_object(sc.world, "apple_1", "Apple", {5, 4});
  Predicate p;
  p.kind = PredKind::ObjectInReceptacle;
  p.object = "apple_1";
  p.receptacle = "table_1";
  sc.task.goal = {p};

  EpisodeConfig cfg = quiet_config();
  cfg.max_ticks = 3;
  Orchestrator o(sc, cfg);
  EpisodeResult r = o.run();

  CHECK_FALSE(r.success_truth);
  CHECK(r.ticks == 3);
  CHECK(o.finished());
}

TEST_CASE("orchestrator: isolated hubs split the goal by ownership then balance") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_robot(sc.world, "r2", {5, 5}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  Predicate nav;
  nav.kind = PredKind::RobotInRoom;
  nav.robot = "r2";
  nav.room = "room_2";
  Predicate fetch;
  fetch.kind = PredKind::ObjectInRoom;
  fetch.object = "apple_1";
  fetch.room = "room_1";
  Predicate place;
  place.kind = PredKind::ObjectInReceptacle;
  place.object = "bread_1";
  place.receptacle = "box_1";
  sc.task.goal = {nav, fetch, place};

  EpisodeConfig cfg = quiet_config();
  cfg.protocol = Protocol::IR;
  Orchestrator o(sc, cfg);

  REQUIRE(o.hub_count() == 2);
  // r2's placement goes to r2's hub; the rest piles onto the lighter hub
  CHECK(o.hub_goal(0).size() == 2);
  CHECK(o.hub_goal(0)[0].kind == PredKind::ObjectInRoom);
  CHECK(o.hub_goal(0)[1].kind == PredKind::ObjectInReceptacle);
  CHECK(o.hub_goal(1).size() == 1);
  CHECK(o.hub_goal(1)[0].kind == PredKind::RobotInRoom);
  CHECK(o.hub_goal(1)[0].robot == "r2");
}

TEST_CASE("orchestrator: trace holds the whole story") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_object(sc.world, "table_1", "Table", {1, 5});
  test::put_object(sc.world, "apple_1", "Apple", {5, 4});
  Predicate p;
  p.kind = PredKind::ObjectInReceptacle;
  p.object = "apple_1";
  p.receptacle = "table_1";
  sc.task.goal = {p};

  EpisodeConfig cfg = quiet_config();
  cfg.trace_path = "/tmp/r2x_test_trace.jsonl";
  Orchestrator o(sc, cfg);
  EpisodeResult r = o.run();
  REQUIRE(r.success_truth);

  std::vector<json> lines = read_trace(cfg.trace_path);
  REQUIRE(lines.size() > 4);

  const json& header = lines.front();
  CHECK(header.at("format") == "trace/1");
  CHECK(header.contains("scenario"));
  CHECK(header.at("config").contains("max_ticks"));
  CHECK_FALSE(header.contains("protocol"));
  CHECK_FALSE(header.at("config").contains("protocol"));

  const json& end = lines.back();
  CHECK(end.at("e") == "end");
  CHECK(end.at("result").at("success_truth") == true);
  CHECK_FALSE(end.at("result").contains("trace_path"));

  std::set<std::string> kinds;
  Tick prev = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    kinds.insert(lines[i].at("e").get<std::string>());
    Tick t = lines[i].at("t").get<Tick>();
    CHECK(t >= prev);
    prev = t;
  }
  for (const char* want : {"obs", "plan", "dispatch", "act", "node", "end"})
    CHECK(kinds.count(want));

  std::remove(cfg.trace_path.c_str());
}

TEST_CASE("orchestrator: byte-identical reruns under failure injection") {
  Scenario sc = two_room_scenario();
  test::put_robot(sc.world, "r1", {0, 0}, 0.0, RobotStatus::IDLE).skills = test::all_skills();
  test::put_object(sc.world, "table_1", "Table", {1, 5});
  test::put_object(sc.world, "apple_1", "Apple", {5, 4});
  sc.cameras.push_back({"cam_1", {5, 0}, 135.0, 12, 60.0, 3});
  sc.reporters.push_back({"sr_apple_1", "apple_1", 4});
  sc.failure = {2, 0.3, 0.2};
  Predicate p;
  p.kind = PredKind::ObjectInReceptacle;
  p.object = "apple_1";
  p.receptacle = "table_1";
  sc.task.goal = {p};

  EpisodeConfig cfg = quiet_config();
  cfg.protocol = Protocol::R2X;

  auto run_once = [&](const std::string& path) {
    EpisodeConfig c = cfg;
    c.trace_path = path;
    Orchestrator o(sc, c);
    return o.run();
  };
  EpisodeResult a = run_once("/tmp/r2x_det_a.jsonl");
  EpisodeResult b = run_once("/tmp/r2x_det_b.jsonl");

  CHECK(a.success_truth == b.success_truth);
  CHECK(a.action_steps == b.action_steps);
  CHECK(a.path_length_m == b.path_length_m);
  CHECK(a.planner_calls == b.planner_calls);
  CHECK(a.token_proxy == b.token_proxy);
  CHECK(a.ticks == b.ticks);
  CHECK(a.fail_count == b.fail_count);

  std::ifstream fa("/tmp/r2x_det_a.jsonl"), fb("/tmp/r2x_det_b.jsonl");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().size() > 0);
  std::remove("/tmp/r2x_det_a.jsonl");
  std::remove("/tmp/r2x_det_b.jsonl");
}

TEST_CASE("orchestrator: result serialization key order") {
  EpisodeResult r;
  r.success_truth = true;
  r.ticks = 42;
  std::string dumped = result_to_json(r).dump();
  const char* want =
      "{\"success_truth\":true,\"success_belief\":false,\"action_steps\":0,"
      "\"path_length_m\":0.0,\"planner_calls\":0,\"token_proxy\":0,\"ticks\":42,"
      "\"fail_count\":0,\"trace_path\":\"\"}";
  CHECK(dumped == want);
}
