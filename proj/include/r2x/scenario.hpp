#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2x/goal.hpp"
#include "r2x/grid_world.hpp"
#include "r2x/planner.hpp"
#include "r2x/sensors.hpp"
#include "r2x/types.hpp"

namespace r2x {

// Mid-episode ground truth mutation: the object teleports (door slam, pet,
// tidy-up...). Applied before sensing on its tick.
struct ScriptedEvent {
  Tick tick{0};
  ObjectId object;
  Cell cell{};
  AreaId room;
  std::optional<ObjectId> rec;
};

struct TaskSpec {
  std::string description;
  GoalCondition goal;
};

struct RoomRects {
  AreaId id;
  std::vector<std::array<int, 4>> rects;  // x0, y0, x1, y1 inclusive
};

struct Scenario {
  std::uint64_t scene_seed{0};
  std::uint64_t failure_seed{0};
  GridWorld world;  // grid, rooms, initial objects and robots
  std::vector<RoomRects> room_rects;
  std::vector<std::array<int, 3>> doors;  // x, y, 0=east 1=north; informational
  std::vector<CameraSpec> cameras;
  std::vector<ReporterSpec> reporters;
  TaskSpec task;
  FailureProfile failure;
  std::vector<ScriptedEvent> events;
};

nlohmann::ordered_json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& j);  // throws SchemaError
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& sc, const std::string& path);

nlohmann::ordered_json goal_to_json(const GoalCondition& goal);
GoalCondition goal_from_json(const nlohmann::json& j);  // throws MalformedGoalError

nlohmann::ordered_json plan_to_json(const PlanGraph& g);
PlanGraph plan_from_json(const nlohmann::json& j);  // throws SchemaError

// Sanity checks beyond parsing: unique ids, in-bounds placements, resolvable
// containment, rooms partitioning the grid, robots on distinct cells.
// Returns a list of problems, empty when the scenario is sound.
std::vector<std::string> validate_scenario(const Scenario& sc);

}  // namespace r2x
