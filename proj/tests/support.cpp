#include "support.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>

namespace r2x::test {

GridWorld open_world(int w, int h) {
  GridWorld g;
  g.width = w;
  g.height = h;
  Room r;
  r.id = "room_1";
  r.name = "hall";
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) r.cells.push_back({x, y});
  std::sort(r.cells.begin(), r.cells.end());
  g.rooms.push_back(std::move(r));
  return g;
}

GridWorld two_rooms() {
  GridWorld g;
  g.width = 6;
  g.height = 6;
  Room a{"room_1", "left", {}};
  Room b{"room_2", "right", {}};
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      (x <= 2 ? a : b).cells.push_back({x, y});
    }
  }
  std::sort(a.cells.begin(), a.cells.end());
  std::sort(b.cells.begin(), b.cells.end());
  g.rooms.push_back(std::move(a));
  g.rooms.push_back(std::move(b));
  for (int y = 0; y < 6; ++y) {
    if (y != 1) g.walls.block_east({2, y});  // door at y=1
  }
  return g;
}

SkillSet all_skills() {
  return {ActionKind::MoveStep, ActionKind::Rotate, ActionKind::Pickup, ActionKind::Put,
          ActionKind::Open,     ActionKind::Close,  ActionKind::ToggleOn, ActionKind::ToggleOff,
          ActionKind::Slice,    ActionKind::Scan};
}

RobotState& put_robot(GridWorld& w, const RobotId& id, Cell c, double theta, RobotStatus sigma) {
  RobotState r;
  r.id = id;
  r.pose.cell = c;
  r.pose.theta = theta;
  r.skills = all_skills();
  r.sigma = sigma;
  return w.robots[id] = std::move(r);
}

ObjectState& put_object(GridWorld& w, const ObjectId& id, const std::string& type, Cell c) {
  ObjectState o;
  o.id = id;
  o.type = type;
  o.pos = c;
  o.room = w.room_of(c);
  return w.objects[id] = std::move(o);
}

bool grid_connected(const GridWorld& w) {
  if (w.width <= 0 || w.height <= 0) return true;
  std::set<Cell> seen{{0, 0}};
  std::deque<Cell> q{{0, 0}};
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    const Cell nbrs[4] = {{c.x - 1, c.y}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x, c.y + 1}};
    for (const Cell& n : nbrs) {
      if (!w.in_bounds(n) || seen.count(n) || w.walls.blocked(c, n)) continue;
      seen.insert(n);
      q.push_back(n);
    }
  }
  return static_cast<int>(seen.size()) == w.width * w.height;
}

void sprinkle_walls(GridWorld& w, Rng& rng, int attempts) {
  for (int i = 0; i < attempts; ++i) {
    bool east = rng.bernoulli(0.5);
    Cell c{rng.range(0, w.width - (east ? 2 : 1)), rng.range(0, w.height - (east ? 1 : 2))};
    if (east) {
      w.walls.block_east(c);
      if (!grid_connected(w)) w.walls.unblock_east(c);
    } else {
      w.walls.block_north(c);
      if (!grid_connected(w)) w.walls.unblock_north(c);
    }
  }
}

bool los_oracle(const WallSet& walls, const Cell& a, const Cell& b) {
  if (a == b) return true;
  const std::int64_t x0 = 2 * a.x + 1, y0 = 2 * a.y + 1;
  const std::int64_t x1 = 2 * b.x + 1, y1 = 2 * b.y + 1;
  const std::int64_t dx = x1 - x0, dy = y1 - y0;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const std::int64_t adx = dx < 0 ? -dx : dx;
  const std::int64_t ady = dy < 0 ? -dy : dy;

  Cell cur = a;
  while (!(cur == b)) {
    // parameter numerators of the next boundary crossings along the travel
    // direction; compare as fractions over (adx, ady) by cross-multiplying
    std::int64_t tx_num = -1, ty_num = -1;
    if (sx != 0) {
      std::int64_t bx = 2 * cur.x + (sx > 0 ? 2 : 0);
      tx_num = bx > x0 ? bx - x0 : x0 - bx;
    }
    if (sy != 0) {
      std::int64_t by = 2 * cur.y + (sy > 0 ? 2 : 0);
      ty_num = by > y0 ? by - y0 : y0 - by;
    }
    bool take_x, take_y;
    if (sx == 0) {
      take_x = false;
      take_y = true;
    } else if (sy == 0) {
      take_x = true;
      take_y = false;
    } else {
      const std::int64_t lhs = tx_num * ady, rhs = ty_num * adx;
      take_x = lhs <= rhs;
      take_y = rhs <= lhs;
    }
    if (take_x && take_y) {
      // exact corner: one of the two detours must be fully open
      Cell after{cur.x + sx, cur.y + sy};
      Cell h{cur.x + sx, cur.y}, v{cur.x, cur.y + sy};
      bool h_ok = !walls.blocked(cur, h) && !walls.blocked(h, after);
      bool v_ok = !walls.blocked(cur, v) && !walls.blocked(v, after);
      if (!h_ok && !v_ok) return false;
      cur = after;
    } else if (take_x) {
      Cell nxt{cur.x + sx, cur.y};
      if (walls.blocked(cur, nxt)) return false;
      cur = nxt;
    } else {
      Cell nxt{cur.x, cur.y + sy};
      if (walls.blocked(cur, nxt)) return false;
      cur = nxt;
    }
  }
  return true;
}

std::vector<int> bfs_distances(const GridWorld& w, const Cell& from) {
  std::vector<int> dist(static_cast<std::size_t>(w.width) * w.height, -1);
  auto idx = [&w](const Cell& c) { return c.y * w.width + c.x; };
  std::deque<Cell> q{from};
  dist[idx(from)] = 0;
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    const Cell nbrs[4] = {{c.x - 1, c.y}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x, c.y + 1}};
    for (const Cell& n : nbrs) {
      if (!w.in_bounds(n) || dist[idx(n)] != -1 || w.walls.blocked(c, n)) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      q.push_back(n);
    }
  }
  return dist;
}

SemanticState belief_for(const GridWorld& w, const std::set<SourceId>& robot_srcs,
                         const std::set<SourceId>& device_srcs) {
  std::vector<RobotState> robots;
  for (const auto& [id, r] : w.robots) robots.push_back(r);
  std::vector<AreaDef> areas;
  for (const auto& room : w.rooms) areas.push_back({room.id, room.name, room.cells});
  return init_state(robots, areas, robot_srcs, device_srcs);
}

SemanticState known_state(const GridWorld& w) {
  SemanticState s = belief_for(w, {}, {});
  for (const auto& [id, o] : w.objects) {
    ObjectRecord rec;
    rec.state = o;
    s.objects[id] = rec;
  }
  return s;
}

void sense_into(const GridWorld& w, SemanticState& b, const RobotId& robot) {
  auto fov = field_of_view(w, robot, 60.0, 12);
  std::set<Cell> cells(fov.cells.begin(), fov.cells.end());
  for (auto& [aid, ba] : b.areas) {
    for (const Cell& c : ba.area.cells) {
      if (cells.count(c)) ba.seen.insert(c);
    }
    ba.area.explored =
        ba.area.cells.empty()
            ? 1.0
            : static_cast<double>(ba.seen.size()) / static_cast<double>(ba.area.cells.size());
  }
}

}  // namespace r2x::test
