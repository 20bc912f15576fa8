#pragma once

#include <string>
#include <vector>

#include "r2x/types.hpp"

namespace r2x {

struct GridWorld;
struct SemanticState;

enum class PredKind { ObjectInRoom, ObjectInReceptacle, PropertyIs, RobotInRoom };

// One goal predicate. Targets are named either by object id or, when the id
// field is empty, by class (meaning: every known instance of the class). A
// receptacle may likewise be given as a concrete id or as a class (meaning:
// any instance).
struct Predicate {
  PredKind kind{PredKind::PropertyIs};
  ObjectId object;            // id-level target, or empty
  std::string object_class;   // class-level target, or empty
  ObjectId receptacle;        // ObjectInReceptacle: concrete container
  std::string receptacle_class;
  AreaId room;                // ObjectInRoom / RobotInRoom
  RobotId robot;              // RobotInRoom
  int prop{0};                // PropertyIs: property index
  int value{0};               // PropertyIs: required bit value
};

using GoalCondition = std::vector<Predicate>;

// Evaluation against a belief. Unknown objects make their predicate false;
// class-level predicates with no known instance are false too.
bool query_goal(const SemanticState& s, const GoalCondition& goal);
bool eval_predicate(const SemanticState& s, const Predicate& p);

// Evaluation against ground truth (episode scoring).
bool goal_satisfied_truth(const GridWorld& w, const GoalCondition& goal);
bool eval_predicate_truth(const GridWorld& w, const Predicate& p);

}  // namespace r2x
