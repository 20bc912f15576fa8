#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "r2x/entities.hpp"
#include "r2x/types.hpp"

namespace r2x {

// Walls live on edges between 4-adjacent cells; every cell itself is
// walkable. An edge is stored once under its canonical key: the east or
// north side of the lower cell.
class WallSet {
 public:
  void block_east(const Cell& c) { east_.insert(c); }
  void block_north(const Cell& c) { north_.insert(c); }
  void unblock_east(const Cell& c) { east_.erase(c); }
  void unblock_north(const Cell& c) { north_.erase(c); }

  // a and b must be 4-adjacent.
  bool blocked(const Cell& a, const Cell& b) const;

  const std::set<Cell>& east_walls() const { return east_; }
  const std::set<Cell>& north_walls() const { return north_; }

 private:
  std::set<Cell> east_;   // wall between (x,y) and (x+1,y)
  std::set<Cell> north_;  // wall between (x,y) and (x,y+1)
};

struct Room {
  AreaId id;
  std::string name;
  std::vector<Cell> cells;  // sorted, disjoint across rooms
};

struct StepResult {
  bool ok{false};
  // Empty when ok; otherwise one of: Collision, OutOfRange, HandsFull,
  // HandsEmpty, NotApplicable, BlockedByClosedReceptacle.
  std::string failure;
};

inline StepResult step_ok() { return {true, ""}; }
inline StepResult step_fail(std::string why) { return {false, std::move(why)}; }

struct Sighting {
  ObjectId id;
  std::string type;
  Cell pos;
  std::optional<ObjectId> rec;
  AreaId room;
  PropertyVector props;
};

struct FovResult {
  std::vector<Cell> cells;          // visible cells, sorted
  std::vector<Sighting> sightings;  // visible objects, sorted by id
};

// Ground-truth world state. Robots and objects are mutated in place by
// execute_action_step.
struct GridWorld {
  int width{0};
  int height{0};
  double cell_size{0.25};  // metres per cell edge
  WallSet walls;
  std::vector<Room> rooms;
  std::map<ObjectId, ObjectState> objects;
  std::map<RobotId, RobotState> robots;

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  }
  // Room lookup; empty id when the cell is in no room (should not happen in
  // valid scenarios).
  AreaId room_of(const Cell& c) const;
  bool cell_occupied_by_robot(const Cell& c, const RobotId& except = "") const;
};

// Line of sight between cell centers. The rule, on a lattice scaled by two
// so that all cell centers and boundaries are integers:
//   - the sight segment joins (2*ax+1, 2*ay+1) and (2*bx+1, 2*by+1);
//   - wherever it crosses a cell boundary line strictly between the
//     endpoints, the wall on the crossed edge must be absent;
//   - where it passes exactly through a cell corner, sight survives if at
//     least one of the two axis-aligned detours around that corner is free
//     of walls on both of its edges.
// All tests are exact integer arithmetic; no floating point is involved.
bool line_of_sight(const WallSet& walls, const Cell& a, const Cell& b);

// Cells visible from `origin` looking along `theta_deg` with half-angle
// `half_angle_deg` (degrees) and range `range_cells` (Euclidean, in cells).
// The origin cell is always included. half_angle_deg >= 180 means a full
// sweep.
std::vector<Cell> visible_cells(const GridWorld& w, const Cell& origin, double theta_deg,
                                double half_angle_deg, int range_cells);

// Full robot sensor sweep: visible cells plus sightings of every object
// whose cell is visible and which is not hidden inside a closed receptacle.
// An object carried by a robot counts as at the carrier's cell.
FovResult field_of_view(const GridWorld& w, const RobotId& robot, double half_angle_deg,
                        int range_cells);

// True when no chain of `rec` links from this object reaches a closed
// openable receptacle (in ground truth).
bool directly_reachable(const GridWorld& w, const ObjectId& id);

// Shortest 4-connected path avoiding walls. Returns the cell sequence
// including `from` and the reached goal, or nullopt when unreachable.
// Deterministic: neighbors expand in (dx,dy) order (-1,0),(0,-1),(0,1),(1,0)
// and the first parent wins, which resolves equal-length ties toward
// lexicographically smaller steps.
std::optional<std::vector<Cell>> plan_path(const GridWorld& w, const Cell& from, const Cell& to,
                                           const std::set<Cell>& avoid = {});

// Same search with a goal set; stops at the first goal cell dequeued.
std::optional<std::vector<Cell>> plan_path_to_any(const GridWorld& w, const Cell& from,
                                                  const std::set<Cell>& goals,
                                                  const std::set<Cell>& avoid = {});

// Executes one primitive in ground truth. Precondition: the robot exists and
// its status is EXECUTING. Every call, successful or not, costs one action
// step (callers count them).
StepResult execute_action_step(GridWorld& w, const RobotId& robot, const ActionStep& step);

}  // namespace r2x
