#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "r2x/planner.hpp"
#include "r2x/scenario.hpp"
#include "r2x/semantic_state.hpp"

using nlohmann::json;

// Stand-in for an external planning service: reads one plan request on
// stdin, answers on stdout. R2X_STUB_MODE picks the behavior; the default
// relays the request through the built-in planner.
int main() {
  std::stringstream buf;
  buf << std::cin.rdbuf();
  const char* m = std::getenv("R2X_STUB_MODE");
  const std::string mode = m ? m : "relay";

  if (mode == "die") return 3;
  if (mode == "malformed") {
    std::cout << "I would rather discuss the weather.\n";
    return 0;
  }
  if (mode == "plan") {
    const char* p = std::getenv("R2X_STUB_PLAN");
    std::cout << (p ? p : "{}") << "\n";
    return 0;
  }
  if (mode == "cyclic") {
    std::cout << R"({"format":"plan/1","nodes":[)"
                 R"({"id":"n01","action":"navigate_to","params":{"room":"room_1"}},)"
                 R"({"id":"n02","action":"navigate_to","params":{"room":"room_1"}}],)"
                 R"("edges":[["n01","n02"],["n02","n01"]]})"
              << "\n";
    return 0;
  }
  if (mode == "flaky") {
    // fails the first R2X_STUB_FAILS calls, counted in a scratch file, then
    // behaves like the relay
    const char* state_file = std::getenv("R2X_STUB_STATE");
    const char* fc = std::getenv("R2X_STUB_FAILS");
    const int budget = fc ? std::atoi(fc) : 2;
    int calls = 0;
    if (state_file) {
      std::ifstream in(state_file);
      in >> calls;
    }
    if (calls < budget) {
      if (state_file) {
        std::ofstream out(state_file);
        out << calls + 1;
      }
      return 3;
    }
  }

  try {
    json req = json::parse(buf.str());
    r2x::SemanticState s = r2x::parse_state(req.at("state").dump());
    r2x::GoalCondition goal = r2x::goal_from_json(req.at("goal"));
    const std::string task = req.value("task", "");
    const int max_nodes = req.value("max_nodes", 32);
    // the request carries no floorplan, so distance tie-breaks degrade to
    // id order; plans stay valid
    r2x::GridWorld map;
    r2x::PlanOutcome out = r2x::baseline_plan(s, goal, map, task, max_nodes);
    // "nothing to do" comes back as a well-formed empty plan
    std::cout << r2x::plan_to_json(out.ok ? out.plan : r2x::PlanGraph{}).dump() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "stub: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
