#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2x/executor.hpp"
#include "r2x/planner_client.hpp"
#include "r2x/scenario.hpp"
#include "r2x/sensors.hpp"

namespace r2x {

// Who talks to whom. IR gives every robot a private hub and a static slice
// of the goal; R2R pools all robots on one hub; R2X additionally routes the
// building's cameras and status reporters into that hub.
enum class Protocol { IR, R2R, R2X };

const char* to_string(Protocol p);
std::optional<Protocol> protocol_from_string(const std::string& s);

struct EpisodeConfig {
  Protocol protocol{Protocol::R2X};
  Tick max_ticks{2000};
  int max_fails{5};       // per-hub budget of node/planning failures
  int stall_horizon{50};  // ticks without progress before aborting
  int robot_range{12};
  double robot_half_angle{60.0};
  PlannerConfig planner;
  std::string trace_path;  // empty disables tracing
};

struct EpisodeResult {
  bool success_truth{false};
  bool success_belief{false};
  long action_steps{0};
  double path_length_m{0.0};
  long planner_calls{0};
  long token_proxy{0};
  Tick ticks{0};
  int fail_count{0};
  std::string trace_path;
};

nlohmann::ordered_json result_to_json(const EpisodeResult& r);

// One episode: sense, fuse, plan, dispatch, execute, repeat until the goal
// is believed done, a hub exhausts its failure budget, progress stalls, or
// the tick budget runs out. Everything is deterministic for a fixed
// scenario and configuration.
class Orchestrator {
 public:
  Orchestrator(Scenario sc, EpisodeConfig cfg);

  EpisodeResult run();

  // Single-tick stepping for tests. Returns false once the episode is over.
  bool step();
  bool finished() const { return finished_; }
  EpisodeResult result() const;

  Tick now() const { return t_; }
  const GridWorld& world() const { return world_; }
  int hub_count() const { return static_cast<int>(hubs_.size()); }
  const SemanticState& hub_state(int i) const { return hubs_[i].state; }
  const PlanGraph& hub_plan(int i) const { return hubs_[i].plan; }
  const GoalCondition& hub_goal(int i) const { return hubs_[i].goal; }
  int hub_fails(int i) const { return hubs_[i].fails; }

 private:
  struct Hub {
    std::set<RobotId> fleet;
    SemanticState state;
    GoalCondition goal;
    PlanGraph plan;
    bool have_plan{false};
    bool needs_replan{false};
    std::map<std::string, NodeExecutor> running;  // node id -> executor
    DeliveryQueue inbox;
    int fails{0};
    long planner_calls{0};
    long tokens{0};
  };

  void apply_scripted_events();
  void deliver_and_fuse();
  void plan_phase();
  void dispatch_phase();
  void act_phase();
  void monitor_phase();
  void sense_phase();
  void finish_if_terminal();
  void halt_hub(Hub& h);
  void release_robot(Hub& h, const RobotId& id, std::optional<double> new_phi);
  bool goal_relevant(const Hub& h, const ObjectId& id, const std::string& type) const;
  void trace(nlohmann::ordered_json e);

  Scenario sc_;
  EpisodeConfig cfg_;
  GridWorld world_;      // mutable ground truth
  GridWorld floorplan_;  // walls and rooms only, what planners may use
  PlannerClient client_;
  std::vector<Hub> hubs_;
  std::map<RobotId, int> hub_of_robot_;
  std::map<RobotId, std::pair<int, std::string>> assignment_;  // robot -> (hub, node)
  std::map<DeviceId, Rng> device_rng_;
  std::ofstream trace_out_;

  Tick t_{0};
  Tick last_progress_{0};
  bool progress_this_tick_{false};
  bool finished_{false};
  bool success_belief_{false};
  long action_steps_{0};
  double path_length_m_{0.0};
};

}  // namespace r2x
