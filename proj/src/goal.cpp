#include "r2x/goal.hpp"

#include <algorithm>

#include "r2x/grid_world.hpp"
#include "r2x/semantic_state.hpp"

namespace r2x {

namespace {

// Collect the target ids for a predicate: the explicit id, or every known
// instance of the class. Empty result means the predicate cannot hold.
template <typename ObjMap, typename GetType>
std::vector<ObjectId> resolve_targets(const ObjMap& objects, GetType get_type,
                                      const Predicate& p) {
  std::vector<ObjectId> out;
  if (!p.object.empty()) {
    if (objects.count(p.object)) out.push_back(p.object);
    return out;
  }
  for (const auto& [id, o] : objects) {
    if (get_type(o) == p.object_class) out.push_back(id);
  }
  return out;
}

bool rec_matches(const std::optional<ObjectId>& rec, const Predicate& p,
                 const std::map<ObjectId, ObjectRecord>* belief, const GridWorld* truth) {
  if (!rec) return false;
  if (!p.receptacle.empty()) return *rec == p.receptacle;
  // class-level receptacle: the container must be a known object of that class
  std::string type;
  if (belief) {
    auto it = belief->find(*rec);
    if (it == belief->end()) return false;
    type = it->second.state.type;
  } else {
    auto it = truth->objects.find(*rec);
    if (it == truth->objects.end()) return false;
    type = it->second.type;
  }
  return type == p.receptacle_class;
}

bool prop_matches(const std::string& type, const PropertyVector& props, const Predicate& p) {
  const ObjectClass* cls = find_class(type);
  if (cls && !(cls->applicable & prop_bit(p.prop))) return false;
  return props.get(p.prop) == p.value;
}

}  // namespace

bool eval_predicate(const SemanticState& s, const Predicate& p) {
  if (p.kind == PredKind::RobotInRoom) {
    auto it = s.robots.find(p.robot);
    if (it == s.robots.end()) return false;
    return s.area_of(it->second.pose.cell) == p.room;
  }
  auto get_type = [](const ObjectRecord& r) { return r.state.type; };
  std::vector<ObjectId> targets = resolve_targets(s.objects, get_type, p);
  if (targets.empty()) return false;
  for (const ObjectId& id : targets) {
    const ObjectState& st = s.objects.at(id).state;
    switch (p.kind) {
      case PredKind::ObjectInRoom:
        if (st.room != p.room) return false;
        break;
      case PredKind::ObjectInReceptacle:
        if (!rec_matches(st.rec, p, &s.objects, nullptr)) return false;
        break;
      case PredKind::PropertyIs:
        if (!prop_matches(st.type, st.props, p)) return false;
        break;
      case PredKind::RobotInRoom:
        return false;  // unreachable
    }
  }
  return true;
}

bool query_goal(const SemanticState& s, const GoalCondition& goal) {
  return std::all_of(goal.begin(), goal.end(),
                     [&s](const Predicate& p) { return eval_predicate(s, p); });
}

bool eval_predicate_truth(const GridWorld& w, const Predicate& p) {
  if (p.kind == PredKind::RobotInRoom) {
    auto it = w.robots.find(p.robot);
    if (it == w.robots.end()) return false;
    return w.room_of(it->second.pose.cell) == p.room;
  }
  auto get_type = [](const ObjectState& o) { return o.type; };
  std::vector<ObjectId> targets = resolve_targets(w.objects, get_type, p);
  if (targets.empty()) return false;
  for (const ObjectId& id : targets) {
    const ObjectState& st = w.objects.at(id);
    switch (p.kind) {
      case PredKind::ObjectInRoom:
        if (st.room != p.room) return false;
        break;
      case PredKind::ObjectInReceptacle:
        if (!rec_matches(st.rec, p, nullptr, &w)) return false;
        break;
      case PredKind::PropertyIs:
        if (!prop_matches(st.type, st.props, p)) return false;
        break;
      case PredKind::RobotInRoom:
        return false;  // unreachable
    }
  }
  return true;
}

bool goal_satisfied_truth(const GridWorld& w, const GoalCondition& goal) {
  return std::all_of(goal.begin(), goal.end(),
                     [&w](const Predicate& p) { return eval_predicate_truth(w, p); });
}

}  // namespace r2x
