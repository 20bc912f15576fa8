#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "r2x/goal.hpp"
#include "r2x/semantic_state.hpp"
#include "r2x/types.hpp"

namespace r2x {

struct GridWorld;

enum class NodeKind {
  FetchAndPlace,  // params: object, receptacle (or room for bare relocation)
  ToggleDevice,   // params: object, value
  OpenClose,      // params: object, value
  SliceObject,    // params: object, knife
  Dispose,        // params: object, receptacle (resolved garbage can)
  NavigateTo,     // params: room or object
  ExploreRoom,    // params: room
};

const char* to_string(NodeKind k);
std::optional<NodeKind> node_kind_from_string(const std::string& s);

enum class NodeStatus { PENDING, RUNNING, DONE, FAILED };

const char* to_string(NodeStatus s);

struct ActionNode {
  std::string id;
  NodeKind kind{NodeKind::NavigateTo};
  std::map<std::string, std::string> params;
  SkillSet req_skills;
  std::optional<RobotId> r_pref;
  NodeStatus status{NodeStatus::PENDING};
  RobotId assigned;  // set while RUNNING
};

struct PlanGraph {
  std::map<std::string, ActionNode> nodes;
  std::set<std::pair<std::string, std::string>> edges;  // (before, after)

  bool empty() const { return nodes.empty(); }
  bool all_terminal() const;
  bool all_done() const;
  // PENDING nodes whose predecessors are all DONE, in id order.
  std::vector<std::string> ready_nodes() const;
};

// Default skill demand per node kind (used when a plan omits req_skills).
SkillSet default_req_skills(NodeKind kind, const std::map<std::string, std::string>& params);

// Sensor pitch each node kind wants during execution; matching prefers
// robots already close to it.
double phi_requirement(NodeKind kind);

struct PlanValidation {
  bool ok{true};
  std::string error;
};

// Structural checks: edges reference nodes, the graph is acyclic, params
// carry the right keys, manipulation targets are known to the belief, and
// every node's skill demand is satisfiable by some robot (honoring r_pref).
PlanValidation validate_plan(const PlanGraph& g, const SemanticState& s);

// Deterministic assignment: hard-filters IDLE robots on skills and r_pref,
// then ranks by believed travel distance, inventory fit, pitch distance,
// and id. Returns nullopt when no robot qualifies.
std::optional<RobotId> match_robot(const ActionNode& node, const SemanticState& s,
                                   const GridWorld& map);

struct PlanOutcome {
  bool ok{false};
  PlanGraph plan;
  std::string error;  // set when !ok: "no_feasible_action", schema or transport detail
  long prompt_tokens{0};
  long completion_tokens{0};
};

// Built-in planner: one node per unsatisfied goal predicate when its targets
// are known, exploration nodes over unexplored rooms otherwise. Containment
// and shared-knife dependencies become edges.
PlanOutcome baseline_plan(const SemanticState& s, const GoalCondition& goal,
                          const GridWorld& map, const std::string& task_description,
                          int max_nodes);

// The request document an external planner receives. Also the basis of the
// token accounting proxy (ceil(chars/4)).
std::string build_prompt(const SemanticState& s, const GoalCondition& goal,
                         const std::string& task_description, int max_nodes);

long token_proxy_for(const std::string& text);

}  // namespace r2x
