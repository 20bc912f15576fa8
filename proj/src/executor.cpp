#include "r2x/executor.hpp"

#include <algorithm>

namespace r2x {

namespace {

// Cells from which a robot can interact with `target` (Chebyshev <= 1,
// standing on the cell included).
std::set<Cell> interaction_cells(const GridWorld& map, const Cell& target) {
  std::set<Cell> out;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      Cell c{target.x + dx, target.y + dy};
      if (map.in_bounds(c)) out.insert(c);
    }
  return out;
}

bool held_by_robot(const SemanticState& b, const ObjectState& o) {
  return o.rec && b.robots.count(*o.rec) > 0;
}

// A receptacle something can be put into right now, by belief: either not
// openable at all or believed open.
bool puttable(const SemanticState& b, const ObjectState& o) {
  const ObjectClass* cls = find_class(o.type);
  if (!cls || !cls->receptacle) return false;
  if (cls->openable && o.props.get(kIsOpen) == 0) return false;
  return o.pos.has_value() && !held_by_robot(b, o);
}

}  // namespace

NodeExecutor::NodeExecutor(ActionNode node, RobotId robot, int max_retries)
    : node_(std::move(node)), robot_(std::move(robot)), retries_left_(max_retries) {}

bool NodeExecutor::complete(const SemanticState& b) const {
  const auto& params = node_.params;
  auto obj = [&](const char* key) -> const ObjectState* {
    auto it = params.find(key);
    return it == params.end() ? nullptr : b.object(it->second);
  };
  switch (node_.kind) {
    case NodeKind::FetchAndPlace: {
      const ObjectState* o = obj("object");
      if (!o) return false;
      if (params.count("receptacle")) return o->rec == params.at("receptacle");
      return o->room == params.at("room") && !held_by_robot(b, *o);
    }
    case NodeKind::Dispose: {
      const ObjectState* o = obj("object");
      return o && o->rec == params.at("receptacle");
    }
    case NodeKind::ToggleDevice: {
      const ObjectState* o = obj("object");
      return o && o->props.get(kIsToggled) == (params.at("value") == "1" ? 1 : 0);
    }
    case NodeKind::OpenClose: {
      const ObjectState* o = obj("object");
      return o && o->props.get(kIsOpen) == (params.at("value") == "1" ? 1 : 0);
    }
    case NodeKind::SliceObject: {
      const ObjectState* o = obj("object");
      return o && o->props.get(kIsSliced) == 1;
    }
    case NodeKind::NavigateTo: {
      auto rit = b.robots.find(robot_);
      if (rit == b.robots.end()) return false;
      if (params.count("room")) return b.area_of(rit->second.pose.cell) == params.at("room");
      const ObjectState* o = obj("object");
      return o && o->pos && chebyshev(rit->second.pose.cell, *o->pos) <= 1;
    }
    case NodeKind::ExploreRoom: {
      auto it = b.areas.find(params.at("room"));
      if (it == b.areas.end()) return false;
      for (const Cell& c : it->second.area.cells)
        if (!it->second.seen.count(c)) return false;
      return true;
    }
  }
  return false;
}

void NodeExecutor::fail(const std::string& reason) {
  state_ = ExecState::FAILED;
  failure_ = reason;
  queue_.clear();
}

void NodeExecutor::retry_or_fail(const std::string& reason) {
  queue_.clear();
  collision_avoid_.clear();
  consecutive_collisions_ = 0;
  if (retries_left_-- <= 0) fail(reason);
}

bool NodeExecutor::compile(const SemanticState& b, const GridWorld& map) {
  queue_.clear();
  auto rit = b.robots.find(robot_);
  if (rit == b.robots.end()) {
    fail("unresolvable_target");
    return false;
  }
  const RobotState& me = rit->second;
  Cell pos = me.pose.cell;

  auto walk_to = [&](const std::set<Cell>& goals) -> bool {
    if (goals.empty()) return false;
    if (goals.count(pos)) return true;
    auto path = plan_path_to_any(map, pos, goals, collision_avoid_);
    if (!path) {
      // blocked detours may make the target unreachable; retry without them
      if (!collision_avoid_.empty()) path = plan_path_to_any(map, pos, goals, {});
      if (!path) return false;
    }
    for (std::size_t i = 1; i < path->size(); ++i)
      queue_.push_back({ActionKind::MoveStep, (*path)[i], ""});
    pos = path->back();
    return true;
  };
  auto face_and = [&](const Cell& at, ActionKind kind, const ObjectId& target) {
    if (!(at == pos)) queue_.push_back({ActionKind::Rotate, at, ""});
    queue_.push_back({kind, at, target});
  };
  // walk adjacent to a believed-closed openable container and open it
  auto open_chain_for = [&](const ObjectState& o) -> bool {
    std::vector<const ObjectState*> chain;
    std::optional<ObjectId> cur = o.rec;
    int hops = 0;
    while (cur && hops++ < 8 && !b.robots.count(*cur)) {
      const ObjectState* c = b.object(*cur);
      if (!c) break;
      const ObjectClass* cls = find_class(c->type);
      if (cls && cls->openable && c->props.get(kIsOpen) == 0) chain.push_back(c);
      cur = c->rec;
    }
    std::reverse(chain.begin(), chain.end());  // outermost first
    for (const ObjectState* c : chain) {
      if (!me.skills.count(ActionKind::Open)) return true;  // let Pickup fail and replan
      if (!c->pos || !walk_to(interaction_cells(map, *c->pos))) return false;
      face_and(*c->pos, ActionKind::Open, c->id);
    }
    return true;
  };
  // free the hands of anything that is not `keep`
  auto stash_held = [&](const ObjectId& keep) -> bool {
    if (!me.inventory || *me.inventory == keep) return true;
    const ObjectState* best = nullptr;
    int best_d = 1 << 29;
    for (const auto& [oid, rec] : b.objects) {
      if (!puttable(b, rec.state)) continue;
      auto path = plan_path_to_any(map, pos, interaction_cells(map, *rec.state.pos), {});
      int d = path ? static_cast<int>(path->size()) : 1 << 29;
      if (!best || d < best_d) {
        best = &rec.state;
        best_d = d;
      }
    }
    if (!best) return false;
    if (!walk_to(interaction_cells(map, *best->pos))) return false;
    face_and(*best->pos, ActionKind::Put, best->id);
    return true;
  };
  auto goto_and_pickup = [&](const ObjectState& o) -> bool {
    if (me.inventory == o.id) return true;
    if (held_by_robot(b, o)) return false;  // in someone else's hands
    if (!o.pos) return false;
    if (!stash_held(o.id)) return false;
    if (!open_chain_for(o)) return false;
    if (!walk_to(interaction_cells(map, *o.pos))) return false;
    face_and(*o.pos, ActionKind::Pickup, o.id);
    return true;
  };
  // walking toward the nearest unseen cell of a room; true when a leg was
  // queued, false when the room is fully seen
  auto explore_leg = [&](const AreaId& room) -> bool {
    auto it = b.areas.find(room);
    if (it == b.areas.end()) return false;
    std::set<Cell> unseen;
    for (const Cell& c : it->second.area.cells)
      if (!it->second.seen.count(c)) unseen.insert(c);
    if (unseen.empty()) return false;
    return walk_to(unseen);
  };

  const auto& params = node_.params;
  switch (node_.kind) {
    case NodeKind::FetchAndPlace:
    case NodeKind::Dispose: {
      const ObjectState* o = b.object(params.at("object"));
      if (!o) break;
      if (!goto_and_pickup(*o)) break;
      if (params.count("receptacle")) {
        const ObjectState* dest = b.object(params.at("receptacle"));
        if (!dest || !dest->pos || held_by_robot(b, *dest)) break;
        const ObjectClass* cls = find_class(dest->type);
        if (cls && cls->openable && dest->props.get(kIsOpen) == 0 &&
            me.skills.count(ActionKind::Open)) {
          if (!walk_to(interaction_cells(map, *dest->pos))) break;
          face_and(*dest->pos, ActionKind::Open, dest->id);
        }
        if (!walk_to(interaction_cells(map, *dest->pos))) break;
        face_and(*dest->pos, ActionKind::Put, dest->id);
        return true;
      }
      // room destination: drop the cargo on the nearest believed open
      // receptacle in that room, sweeping the room until one is known
      const AreaId room = params.at("room");
      const ObjectState* best = nullptr;
      int best_d = 1 << 29;
      for (const auto& [oid, rec] : b.objects) {
        if (!puttable(b, rec.state) || rec.state.room != room) continue;
        auto path = plan_path_to_any(map, pos, interaction_cells(map, *rec.state.pos), {});
        int d = path ? static_cast<int>(path->size()) : 1 << 29;
        if (!best || d < best_d) {
          best = &rec.state;
          best_d = d;
        }
      }
      if (best) {
        if (!walk_to(interaction_cells(map, *best->pos))) break;
        face_and(*best->pos, ActionKind::Put, best->id);
        return true;
      }
      if (explore_leg(room)) return true;  // keep looking for a surface
      break;
    }
    case NodeKind::ToggleDevice:
    case NodeKind::OpenClose: {
      const ObjectState* o = b.object(params.at("object"));
      if (!o || !o->pos) break;
      if (!walk_to(interaction_cells(map, *o->pos))) break;
      ActionKind kind;
      if (node_.kind == NodeKind::ToggleDevice)
        kind = params.at("value") == "1" ? ActionKind::ToggleOn : ActionKind::ToggleOff;
      else
        kind = params.at("value") == "1" ? ActionKind::Open : ActionKind::Close;
      face_and(*o->pos, kind, o->id);
      return true;
    }
    case NodeKind::SliceObject: {
      const ObjectState* o = b.object(params.at("object"));
      if (!o || !o->pos) break;
      const ObjectState* knife = nullptr;
      if (params.count("knife")) {
        knife = b.object(params.at("knife"));
      } else {
        for (const auto& [oid, rec] : b.objects) {
          if (rec.state.type == "Knife" && (!held_by_robot(b, rec.state) ||
                                            rec.state.rec == robot_)) {
            knife = &rec.state;
            break;
          }
        }
      }
      if (!knife) break;
      if (!goto_and_pickup(*knife)) break;
      if (!open_chain_for(*o)) break;
      if (!walk_to(interaction_cells(map, *o->pos))) break;
      face_and(*o->pos, ActionKind::Slice, o->id);
      return true;
    }
    case NodeKind::NavigateTo: {
      if (params.count("room")) {
        auto it = b.areas.find(params.at("room"));
        if (it == b.areas.end()) break;
        std::set<Cell> goals(it->second.area.cells.begin(), it->second.area.cells.end());
        if (!walk_to(goals)) break;
        return true;
      }
      const ObjectState* o = b.object(params.at("object"));
      if (!o || !o->pos) break;
      if (!walk_to(interaction_cells(map, *o->pos))) break;
      return true;
    }
    case NodeKind::ExploreRoom: {
      if (explore_leg(params.at("room"))) return true;
      break;
    }
  }
  fail("unresolvable_target");
  return false;
}

ExecReport NodeExecutor::tick(GridWorld& world, SemanticState& belief, Tick t) {
  ExecReport rep;
  if (state_ != ExecState::RUNNING) return rep;
  if (complete(belief)) {
    state_ = ExecState::DONE;
    return rep;
  }
  if (queue_.empty() && !compile(belief, world)) return rep;
  // compile can legitimately produce nothing while fresher sensing is still
  // in flight (e.g. the robot stands on a cell the hub has not fused yet);
  // wait a tick rather than failing, the stall monitor guards real loops
  if (queue_.empty()) return rep;

  ActionStep step = queue_.front();
  queue_.pop_front();
  StepResult res = execute_action_step(world, robot_, step);
  rep.acted = true;
  rep.step = step;
  rep.ok = res.ok;
  rep.failure = res.failure;

  if (res.ok) {
    consecutive_collisions_ = 0;
    collision_wait_ = 0;
    collision_avoid_.clear();
    rep.moved = step.kind == ActionKind::MoveStep;
    apply_manipulation_effects(belief, robot_, step, t);
    if (queue_.empty() && complete(belief)) state_ = ExecState::DONE;
    return rep;
  }

  if (res.failure == "Collision") {
    // total budget, never reset on success: two robots trading right of way
    // around the same block can alternate ok/collision forever otherwise
    if (++total_collisions_ >= 12) {
      retry_or_fail("Collision");
      return rep;
    }
    if (collision_wait_ < 2) {
      // transient contention usually clears once the other robot moves on,
      // so hold the step instead of replotting straight away
      ++collision_wait_;
      queue_.push_front(step);
      return rep;
    }
    collision_wait_ = 0;
    if (++consecutive_collisions_ >= 3) {
      retry_or_fail("Collision");
    } else {
      collision_avoid_.insert(step.cell);
      queue_.clear();  // replot around the blocker next tick
    }
    return rep;
  }

  retry_or_fail(res.failure);
  return rep;
}

}  // namespace r2x
