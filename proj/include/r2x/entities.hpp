#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "r2x/types.hpp"

namespace r2x {

enum class RobotStatus { IDLE, EXECUTING, CANCELING };

const char* to_string(RobotStatus s);

struct RobotState {
  RobotId id;
  Pose pose;
  std::optional<ObjectId> inventory;
  SkillSet skills;
  RobotStatus sigma{RobotStatus::IDLE};
};

// Shared between ground truth and beliefs. In ground truth `pos` is always
// set; in a belief it can be empty when only a status report has been seen.
struct ObjectState {
  ObjectId id;
  std::string type;
  std::optional<Cell> pos;
  PropertyVector props;
  std::optional<ObjectId> rec;  // containing receptacle or carrying robot
  AreaId room;
  auto operator<=>(const ObjectState&) const = default;
};

struct AreaState {
  AreaId id;
  std::string name;
  std::vector<Cell> cells;  // floorplan footprint, sorted
  double explored{0.0};     // fraction of cells some robot has observed
};

// One object mention inside an observation. Spatial fields (pos/rec/room)
// travel together: a camera or robot sighting carries them, a status
// reporter does not.
struct ObsEntry {
  ObjectId id;
  std::string type;
  bool has_spatial{false};
  Cell pos{};
  std::optional<ObjectId> rec;
  AreaId room;
  PropMask observed{0};    // which property bits this entry reports
  PropertyVector props;    // values at the observed bits
};

struct Observation {
  SourceId src;
  Tick tau{0};
  std::vector<ObsEntry> entries;
  std::vector<Cell> visited_cells;   // robot sources report their FOV sweep
  std::optional<Pose> self_pose;     // robot sources report their own pose
};

// A single primitive motion or manipulation command for one robot.
struct ActionStep {
  ActionKind kind{ActionKind::Scan};
  Cell cell{};       // MoveStep destination / Rotate focus point
  ObjectId target;   // manipulation target object
};

}  // namespace r2x
