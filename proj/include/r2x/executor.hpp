#pragma once

#include <deque>
#include <set>
#include <string>

#include "r2x/grid_world.hpp"
#include "r2x/planner.hpp"
#include "r2x/semantic_state.hpp"

namespace r2x {

enum class ExecState { RUNNING, DONE, FAILED };

// What a robot did during one tick, for tracing and metrics.
struct ExecReport {
  bool acted{false};
  ActionStep step;
  bool ok{false};
  std::string failure;
  bool moved{false};  // successful MoveStep, counts toward path length
};

// Drives one robot through one plan node, one primitive per tick. Steps are
// compiled from the hub's belief and recompiled after any step failure, so
// stale knowledge costs time instead of correctness. Completion is judged on
// the belief too; the robot's own sensing keeps it honest.
class NodeExecutor {
 public:
  NodeExecutor(ActionNode node, RobotId robot, int max_retries = 2);

  const ActionNode& node() const { return node_; }
  const RobotId& robot() const { return robot_; }
  ExecState state() const { return state_; }
  const std::string& failure_reason() const { return failure_; }

  // Runs at most one primitive in ground truth and mirrors a success into
  // the belief. The orchestrator calls this once per tick while RUNNING.
  ExecReport tick(GridWorld& world, SemanticState& belief, Tick t);

 private:
  bool complete(const SemanticState& b) const;
  // Rebuilds the step queue from the belief. Returns false when the target
  // cannot be resolved at all (sets state_/failure_).
  bool compile(const SemanticState& b, const GridWorld& map);
  void fail(const std::string& reason);
  void retry_or_fail(const std::string& reason);

  ActionNode node_;
  RobotId robot_;
  std::deque<ActionStep> queue_;
  int retries_left_;
  int consecutive_collisions_{0};
  int collision_wait_{0};
  int total_collisions_{0};
  std::set<Cell> collision_avoid_;
  ExecState state_{ExecState::RUNNING};
  std::string failure_;
};

}  // namespace r2x
