#include "r2x/grid_world.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <numbers>

namespace {
constexpr double kPi = std::numbers::pi_v<double>;
}

namespace r2x {

bool WallSet::blocked(const Cell& a, const Cell& b) const {
  if (a.y == b.y) {
    if (b.x == a.x + 1) return east_.count(a) > 0;
    if (a.x == b.x + 1) return east_.count(b) > 0;
  } else if (a.x == b.x) {
    if (b.y == a.y + 1) return north_.count(a) > 0;
    if (a.y == b.y + 1) return north_.count(b) > 0;
  }
  return true;  // not 4-adjacent
}

AreaId GridWorld::room_of(const Cell& c) const {
  for (const auto& r : rooms) {
    if (std::binary_search(r.cells.begin(), r.cells.end(), c)) return r.id;
  }
  return {};
}

bool GridWorld::cell_occupied_by_robot(const Cell& c, const RobotId& except) const {
  for (const auto& [id, r] : robots) {
    if (id != except && r.pose.cell == c) return true;
  }
  return false;
}

namespace {

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

// Corner of the doubled lattice at (2*cx, 2*cy), segment heading (sx, sy)
// with both signs nonzero. Sight survives if either axis-aligned detour
// around the corner is wall-free on both edges.
bool corner_passable(const WallSet& walls, int cx, int cy, int sx, int sy) {
  Cell before{cx - (sx > 0 ? 1 : 0), cy - (sy > 0 ? 1 : 0)};
  Cell after{cx - (sx < 0 ? 1 : 0), cy - (sy < 0 ? 1 : 0)};
  Cell via_h{after.x, before.y};
  Cell via_v{before.x, after.y};
  bool h_ok = !walls.blocked(before, via_h) && !walls.blocked(via_h, after);
  bool v_ok = !walls.blocked(before, via_v) && !walls.blocked(via_v, after);
  return h_ok || v_ok;
}

}  // namespace

bool line_of_sight(const WallSet& walls, const Cell& a, const Cell& b) {
  if (a == b) return true;
  const std::int64_t x0 = 2 * a.x + 1, y0 = 2 * a.y + 1;
  const std::int64_t x1 = 2 * b.x + 1, y1 = 2 * b.y + 1;
  const std::int64_t dx = x1 - x0, dy = y1 - y0;

  // Vertical boundary lines X = 2k strictly between the endpoints.
  for (std::int64_t X = std::min(x0, x1) + 1; X < std::max(x0, x1); ++X) {
    if (X % 2 != 0) continue;
    std::int64_t num = y0 * dx + (X - x0) * dy;  // crossing y = num / den
    std::int64_t den = dx;
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const int k = static_cast<int>(X / 2);
    if (num % den == 0 && (num / den) % 2 == 0) {
      // exact corner (the horizontal scan skips these)
      const int sy = dy > 0 ? 1 : -1;
      const int sx = dx > 0 ? 1 : -1;
      if (!corner_passable(walls, k, static_cast<int>(num / den / 2), sx, sy)) return false;
      continue;
    }
    const int m = static_cast<int>(floor_div(num, 2 * den));
    if (walls.blocked(Cell{k - 1, m}, Cell{k, m})) return false;
  }

  // Horizontal boundary lines Y = 2m strictly between the endpoints.
  for (std::int64_t Y = std::min(y0, y1) + 1; Y < std::max(y0, y1); ++Y) {
    if (Y % 2 != 0) continue;
    std::int64_t num = x0 * dy + (Y - y0) * dx;  // crossing x = num / den
    std::int64_t den = dy;
    if (den < 0) {
      num = -num;
      den = -den;
    }
    if (num % den == 0 && (num / den) % 2 == 0) continue;  // corner, handled above
    const int m = static_cast<int>(Y / 2);
    const int k = static_cast<int>(floor_div(num, 2 * den));
    if (walls.blocked(Cell{k, m - 1}, Cell{k, m})) return false;
  }
  return true;
}

std::vector<Cell> visible_cells(const GridWorld& w, const Cell& origin, double theta_deg,
                                double half_angle_deg, int range_cells) {
  std::vector<Cell> out;
  const long r2 = static_cast<long>(range_cells) * range_cells;
  const bool full_sweep = half_angle_deg >= 180.0;
  for (int y = origin.y - range_cells; y <= origin.y + range_cells; ++y) {
    for (int x = origin.x - range_cells; x <= origin.x + range_cells; ++x) {
      Cell c{x, y};
      if (!w.in_bounds(c)) continue;
      const long dx = c.x - origin.x, dy = c.y - origin.y;
      if (dx * dx + dy * dy > r2) continue;
      if (c != origin && !full_sweep) {
        const double ang = std::atan2(static_cast<double>(dy), static_cast<double>(dx)) * 180.0 /
                           kPi;
        const double diff = std::fabs(std::remainder(ang - theta_deg, 360.0));
        if (diff > half_angle_deg + 1e-9) continue;
      }
      if (!line_of_sight(w.walls, origin, c)) continue;
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool directly_reachable(const GridWorld& w, const ObjectId& id) {
  // Follow the containment chain upward; a closed openable receptacle
  // anywhere above hides the object.
  std::optional<ObjectId> cur = w.objects.at(id).rec;
  int guard = 0;
  while (cur && ++guard < 64) {
    if (w.robots.count(*cur)) return true;  // carried by a robot
    auto it = w.objects.find(*cur);
    if (it == w.objects.end()) return true;
    const ObjectClass* cls = find_class(it->second.type);
    if (cls && cls->openable && it->second.props.get(kIsOpen) == 0) return false;
    cur = it->second.rec;
  }
  return true;
}

FovResult field_of_view(const GridWorld& w, const RobotId& robot, double half_angle_deg,
                        int range_cells) {
  const RobotState& r = w.robots.at(robot);
  FovResult out;
  out.cells = visible_cells(w, r.pose.cell, r.pose.theta, half_angle_deg, range_cells);
  const std::set<Cell> vis(out.cells.begin(), out.cells.end());
  for (const auto& [id, o] : w.objects) {
    if (!o.pos || !vis.count(*o.pos)) continue;
    if (!directly_reachable(w, id)) continue;  // hidden in a closed receptacle
    out.sightings.push_back(Sighting{id, o.type, *o.pos, o.rec, o.room, o.props});
  }
  return out;
}

namespace {

std::optional<std::vector<Cell>> bfs(const GridWorld& w, const Cell& from,
                                     const std::set<Cell>& goals, const std::set<Cell>& avoid) {
  if (goals.empty()) return std::nullopt;
  if (goals.count(from)) return std::vector<Cell>{from};
  const int W = w.width, H = w.height;
  auto idx = [W](const Cell& c) { return c.y * W + c.x; };
  std::vector<int> parent(static_cast<std::size_t>(W) * H, -1);
  std::deque<Cell> queue;
  queue.push_back(from);
  parent[idx(from)] = idx(from);
  // Fixed expansion order gives deterministic equal-length tie-breaks.
  static const int kDx[4] = {-1, 0, 0, 1};
  static const int kDy[4] = {0, -1, 1, 0};
  while (!queue.empty()) {
    Cell cur = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      Cell nxt{cur.x + kDx[d], cur.y + kDy[d]};
      if (!w.in_bounds(nxt) || parent[idx(nxt)] != -1) continue;
      if (w.walls.blocked(cur, nxt) || avoid.count(nxt)) continue;
      parent[idx(nxt)] = idx(cur);
      if (goals.count(nxt)) {
        std::vector<Cell> path{nxt};
        Cell c = cur;
        while (true) {
          path.push_back(c);
          int p = parent[idx(c)];
          if (p == idx(c)) break;
          c = Cell{p % W, p / W};
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(nxt);
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::vector<Cell>> plan_path(const GridWorld& w, const Cell& from, const Cell& to,
                                           const std::set<Cell>& avoid) {
  return bfs(w, from, {to}, avoid);
}

std::optional<std::vector<Cell>> plan_path_to_any(const GridWorld& w, const Cell& from,
                                                  const std::set<Cell>& goals,
                                                  const std::set<Cell>& avoid) {
  return bfs(w, from, goals, avoid);
}

namespace {

double heading_toward(const Cell& from, const Cell& to) {
  if (from == to) return -1.0;
  return normalize_deg(std::atan2(static_cast<double>(to.y - from.y),
                                  static_cast<double>(to.x - from.x)) *
                       180.0 / kPi);
}

StepResult do_move(GridWorld& w, RobotState& r, const Cell& dest) {
  if (manhattan(r.pose.cell, dest) != 1) return step_fail("NotApplicable");
  if (!w.in_bounds(dest)) return step_fail("Collision");
  if (w.walls.blocked(r.pose.cell, dest)) return step_fail("Collision");
  if (w.cell_occupied_by_robot(dest, r.id)) return step_fail("Collision");
  r.pose.theta = heading_toward(r.pose.cell, dest);
  r.pose.cell = dest;
  if (r.inventory) {
    ObjectState& o = w.objects.at(*r.inventory);
    o.pos = dest;
    o.room = w.room_of(dest);
  }
  return step_ok();
}

bool in_interaction_range(const RobotState& r, const ObjectState& o) {
  return o.pos && chebyshev(r.pose.cell, *o.pos) <= 1;
}

}  // namespace

StepResult execute_action_step(GridWorld& w, const RobotId& robot, const ActionStep& step) {
  RobotState& r = w.robots.at(robot);
  assert(r.sigma == RobotStatus::EXECUTING);
  if (!r.skills.count(step.kind)) return step_fail("NotApplicable");

  switch (step.kind) {
    case ActionKind::MoveStep:
      return do_move(w, r, step.cell);

    case ActionKind::Rotate: {
      double h = heading_toward(r.pose.cell, step.cell);
      if (h >= 0.0) r.pose.theta = h;
      return step_ok();
    }

    case ActionKind::Scan:
      return step_ok();

    case ActionKind::Pickup: {
      auto it = w.objects.find(step.target);
      if (it == w.objects.end()) return step_fail("OutOfRange");
      ObjectState& o = it->second;
      const ObjectClass* cls = find_class(o.type);
      if (!cls || !cls->pickupable) return step_fail("NotApplicable");
      if (o.rec && w.robots.count(*o.rec)) return step_fail("NotApplicable");  // grasped
      if (r.inventory) return step_fail("HandsFull");
      if (!in_interaction_range(r, o)) return step_fail("OutOfRange");
      if (!directly_reachable(w, o.id)) return step_fail("BlockedByClosedReceptacle");
      o.rec = r.id;
      o.pos = r.pose.cell;
      o.room = w.room_of(r.pose.cell);
      r.inventory = o.id;
      return step_ok();
    }

    case ActionKind::Put: {
      if (!r.inventory) return step_fail("HandsEmpty");
      auto it = w.objects.find(step.target);
      if (it == w.objects.end()) return step_fail("OutOfRange");
      ObjectState& k = it->second;
      const ObjectClass* cls = find_class(k.type);
      if (!cls || !cls->receptacle) return step_fail("NotApplicable");
      if (!in_interaction_range(r, k)) return step_fail("OutOfRange");
      if (cls->openable && k.props.get(kIsOpen) == 0)
        return step_fail("BlockedByClosedReceptacle");
      ObjectState& o = w.objects.at(*r.inventory);
      o.rec = k.id;
      o.pos = k.pos;
      o.room = k.room;
      r.inventory.reset();
      return step_ok();
    }

    case ActionKind::Open:
    case ActionKind::Close: {
      auto it = w.objects.find(step.target);
      if (it == w.objects.end()) return step_fail("OutOfRange");
      ObjectState& o = it->second;
      const ObjectClass* cls = find_class(o.type);
      if (!cls || !cls->openable) return step_fail("NotApplicable");
      if (!in_interaction_range(r, o)) return step_fail("OutOfRange");
      o.props.set(kIsOpen, step.kind == ActionKind::Open ? 1 : 0);
      return step_ok();
    }

    case ActionKind::ToggleOn:
    case ActionKind::ToggleOff: {
      auto it = w.objects.find(step.target);
      if (it == w.objects.end()) return step_fail("OutOfRange");
      ObjectState& o = it->second;
      const ObjectClass* cls = find_class(o.type);
      if (!cls || !cls->toggleable) return step_fail("NotApplicable");
      if (!in_interaction_range(r, o)) return step_fail("OutOfRange");
      o.props.set(kIsToggled, step.kind == ActionKind::ToggleOn ? 1 : 0);
      return step_ok();
    }

    case ActionKind::Slice: {
      auto it = w.objects.find(step.target);
      if (it == w.objects.end()) return step_fail("OutOfRange");
      ObjectState& o = it->second;
      const ObjectClass* cls = find_class(o.type);
      if (!cls || !cls->sliceable) return step_fail("NotApplicable");
      if (!r.inventory || w.objects.at(*r.inventory).type != "Knife")
        return step_fail("NotApplicable");
      if (!in_interaction_range(r, o)) return step_fail("OutOfRange");
      if (!directly_reachable(w, o.id)) return step_fail("BlockedByClosedReceptacle");
      o.props.set(kIsSliced, 1);
      return step_ok();
    }
  }
  return step_fail("NotApplicable");
}

}  // namespace r2x
