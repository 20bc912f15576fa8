#include "r2x/scene_gen.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <vector>

#include "r2x/errors.hpp"
#include "r2x/rng.hpp"
#include "r2x/sensors.hpp"

namespace r2x {
namespace {

struct Rect {
  int x0, y0, x1, y1;  // inclusive
  int w() const { return x1 - x0 + 1; }
  int h() const { return y1 - y0 + 1; }
  int area() const { return w() * h(); }
  bool contains(const Cell& c) const {
    return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1;
  }
};

// Recursive halving of the floor rectangle: always cut the largest room at
// 40..60% of its longer side.
std::vector<Rect> split_rooms(int width, int height, int rooms, Rng& rng) {
  std::vector<Rect> rects{{0, 0, width - 1, height - 1}};
  while (static_cast<int>(rects.size()) < rooms) {
    int pick = -1, best_area = 0;
    for (int i = 0; i < static_cast<int>(rects.size()); ++i) {
      if (std::max(rects[i].w(), rects[i].h()) < 4) continue;
      if (rects[i].area() > best_area) {
        best_area = rects[i].area();
        pick = i;
      }
    }
    if (pick < 0) throw GenerationError("rooms do not fit the grid");
    Rect r = rects[pick];
    const bool vertical = r.w() >= r.h();  // cut across the longer side
    const int span = vertical ? r.w() : r.h();
    const int lo = std::max(2, (span * 2 + 4) / 5);
    const int hi = std::min(span - 2, (span * 3) / 5);
    const int cut = lo + (hi > lo ? static_cast<int>(rng.bounded(hi - lo + 1)) : 0);
    if (vertical) {
      rects[pick] = {r.x0, r.y0, r.x0 + cut - 1, r.y1};
      rects.push_back({r.x0 + cut, r.y0, r.x1, r.y1});
    } else {
      rects[pick] = {r.x0, r.y0, r.x1, r.y0 + cut - 1};
      rects.push_back({r.x0, r.y0 + cut, r.x1, r.y1});
    }
  }
  return rects;
}

const char* kRoomNames[8] = {"kitchen", "living room", "bedroom",  "office",
                             "hallway", "storage",     "bathroom", "studio"};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Scenario generate_scene(const SceneParams& p, std::uint64_t seed) {
  if (p.rooms < 2 || p.rooms > 8) throw GenerationError("rooms must be 2..8");
  if (p.width < 8 || p.height < 8) throw GenerationError("grid too small");
  if (p.team_size < 1 || p.team_size > 6) throw GenerationError("team size must be 1..6");

  Scenario sc;
  sc.scene_seed = seed;
  sc.failure_seed = derive_seed(seed, "failure");
  GridWorld& w = sc.world;
  w.width = p.width;
  w.height = p.height;

  Rng layout_rng(derive_seed(seed, "layout"));
  std::vector<Rect> rects = split_rooms(p.width, p.height, p.rooms, layout_rng);

  auto room_index = [&](const Cell& c) {
    for (int i = 0; i < static_cast<int>(rects.size()); ++i)
      if (rects[i].contains(c)) return i;
    return -1;
  };

  // walls along every rect boundary, doors knocked out afterwards
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      Cell c{x, y};
      if (x + 1 < p.width && room_index(c) != room_index({x + 1, y})) w.walls.block_east(c);
      if (y + 1 < p.height && room_index(c) != room_index({x, y + 1})) w.walls.block_north(c);
    }
  }

  for (int i = 0; i < static_cast<int>(rects.size()); ++i) {
    Room room;
    room.id = "room_" + std::to_string(i + 1);
    room.name = kRoomNames[i % 8];
    for (int y = rects[i].y0; y <= rects[i].y1; ++y)
      for (int x = rects[i].x0; x <= rects[i].x1; ++x) room.cells.push_back({x, y});
    std::sort(room.cells.begin(), room.cells.end());
    w.rooms.push_back(std::move(room));
    sc.room_rects.push_back(
        {"room_" + std::to_string(i + 1),
         {{rects[i].x0, rects[i].y0, rects[i].x1, rects[i].y1}}});
  }

  // doorways: a spanning tree over room adjacency guarantees connectivity,
  // extra doors open with some luck
  std::map<std::pair<int, int>, std::vector<std::array<int, 3>>> shared;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      Cell c{x, y};
      int a = room_index(c);
      if (x + 1 < p.width) {
        int b = room_index({x + 1, y});
        if (a != b) shared[{std::min(a, b), std::max(a, b)}].push_back({x, y, 0});
      }
      if (y + 1 < p.height) {
        int b = room_index({x, y + 1});
        if (a != b) shared[{std::min(a, b), std::max(a, b)}].push_back({x, y, 1});
      }
    }
  }
  auto open_door = [&](const std::array<int, 3>& d) {
    if (d[2] == 0)
      w.walls.unblock_east({d[0], d[1]});
    else
      w.walls.unblock_north({d[0], d[1]});
    sc.doors.push_back(d);
  };
  std::set<int> connected{0};
  std::set<std::pair<int, int>> tree;
  while (static_cast<int>(connected.size()) < p.rooms) {
    bool grew = false;
    for (const auto& [pair, edges] : shared) {
      const bool a_in = connected.count(pair.first), b_in = connected.count(pair.second);
      if (a_in == b_in) continue;
      connected.insert(a_in ? pair.second : pair.first);
      tree.insert(pair);
      open_door(edges[layout_rng.bounded(edges.size())]);
      grew = true;
      break;
    }
    if (!grew) throw GenerationError("room adjacency graph is disconnected");
  }
  for (const auto& [pair, edges] : shared) {
    if (tree.count(pair)) continue;
    if (layout_rng.bernoulli(0.3)) open_door(edges[layout_rng.bounded(edges.size())]);
  }

  // furniture, devices, and loose items
  Rng obj_rng(derive_seed(seed, "objects"));
  std::set<Cell> occupied;
  std::map<std::string, int> counters;

  auto free_cell_in = [&](int room, Rng& rng) -> Cell {
    const Rect& r = rects[static_cast<std::size_t>(room)];
    for (int tries = 0; tries < 200; ++tries) {
      Cell c{r.x0 + static_cast<int>(rng.bounded(r.w())),
             r.y0 + static_cast<int>(rng.bounded(r.h()))};
      if (!occupied.count(c)) return c;
    }
    for (const Cell& c : w.rooms[static_cast<std::size_t>(room)].cells)
      if (!occupied.count(c)) return c;
    throw GenerationError("no free cell left in " + w.rooms[static_cast<std::size_t>(room)].id);
  };

  auto add_object = [&](const std::string& cls, const Cell& c) -> ObjectState& {
    const std::string id = lower(cls) + "_" + std::to_string(++counters[cls]);
    ObjectState o;
    o.id = id;
    o.type = cls;
    o.pos = c;
    o.room = w.room_of(c);
    occupied.insert(c);
    return w.objects.emplace(id, std::move(o)).first->second;
  };

  const char* kSurfaces[3] = {"Table", "CounterTop", "Shelf"};
  const char* kContainers[4] = {"Fridge", "Cabinet", "Drawer", "Microwave"};
  const char* kDevices[4] = {"TV", "Lamp", "Radio", "Laptop"};
  const char* kItems[14] = {"Apple", "Tomato",        "Egg",        "Lettuce", "Potato",
                            "Bread", "Cup",           "Plate",      "Bowl",    "Knife",
                            "Book",  "RemoteControl", "SoapBottle", "Cloth"};

  std::vector<ObjectId> surfaces, containers, devices;
  for (int i = 0; i < p.rooms; ++i) {
    ObjectState& s = add_object(kSurfaces[obj_rng.bounded(3)], free_cell_in(i, obj_rng));
    surfaces.push_back(s.id);
  }
  add_object("GarbageCan", free_cell_in(static_cast<int>(obj_rng.bounded(p.rooms)), obj_rng));
  for (int i = 0; i < p.rooms / 2; ++i) {
    ObjectState& o = add_object(kContainers[obj_rng.bounded(4)],
                                free_cell_in(static_cast<int>(obj_rng.bounded(p.rooms)), obj_rng));
    o.props.set(kIsOpen, obj_rng.bernoulli(0.3) ? 1 : 0);
    containers.push_back(o.id);
  }
  const int n_devices = std::max(2, p.rooms - 1);
  for (int i = 0; i < n_devices; ++i) {
    ObjectState& o = add_object(kDevices[obj_rng.bounded(4)],
                                free_cell_in(static_cast<int>(obj_rng.bounded(p.rooms)), obj_rng));
    o.props.set(kIsToggled, obj_rng.bernoulli(0.6) ? 1 : 0);
    devices.push_back(o.id);
  }
  const int n_items =
      std::max(4, static_cast<int>(p.object_density * p.width * p.height + 0.5));
  std::vector<ObjectId> items;
  for (int i = 0; i < n_items; ++i) {
    const std::string cls = kItems[obj_rng.bounded(14)];
    const double where = obj_rng.uniform();
    if (where < 0.35 && !surfaces.empty()) {
      const ObjectState& host = w.objects.at(surfaces[obj_rng.bounded(surfaces.size())]);
      const std::string id = lower(cls) + "_" + std::to_string(++counters[cls]);
      ObjectState o;
      o.id = id;
      o.type = cls;
      o.pos = host.pos;
      o.rec = host.id;
      o.room = host.room;
      items.push_back(id);
      w.objects.emplace(id, std::move(o));
    } else if (where < 0.5 && !containers.empty()) {
      const ObjectState& host = w.objects.at(containers[obj_rng.bounded(containers.size())]);
      const std::string id = lower(cls) + "_" + std::to_string(++counters[cls]);
      ObjectState o;
      o.id = id;
      o.type = cls;
      o.pos = host.pos;
      o.rec = host.id;
      o.room = host.room;
      items.push_back(id);
      w.objects.emplace(id, std::move(o));
    } else {
      ObjectState& o =
          add_object(cls, free_cell_in(static_cast<int>(obj_rng.bounded(p.rooms)), obj_rng));
      items.push_back(o.id);
    }
  }

  // six poses always come out of the stream so the same seed yields the same
  // scene for every team size; the fleet is a prefix
  Rng robot_rng(derive_seed(seed, "robots"));
  std::vector<RobotState> poses;
  for (int i = 0; i < 6; ++i) {
    RobotState r;
    r.id = "r" + std::to_string(i + 1);
    r.pose.cell = free_cell_in(i % p.rooms, robot_rng);
    occupied.insert(r.pose.cell);
    r.pose.theta = 90.0 * static_cast<double>(robot_rng.bounded(4));
    r.skills = {ActionKind::MoveStep, ActionKind::Rotate,    ActionKind::Pickup,
                ActionKind::Put,      ActionKind::Open,      ActionKind::Close,
                ActionKind::ToggleOn, ActionKind::ToggleOff, ActionKind::Slice,
                ActionKind::Scan};
    poses.push_back(std::move(r));
  }
  for (int i = 0; i < p.team_size; ++i) w.robots.emplace(poses[i].id, poses[i]);

  // the goal comes from one of four chore templates
  Rng task_rng(derive_seed(seed, "task"));
  auto inside_closed = [&](const ObjectId& id) {
    const ObjectState& o = w.objects.at(id);
    if (!o.rec) return false;
    const ObjectState& host = w.objects.at(*o.rec);
    const ObjectClass* cls = find_class(host.type);
    return cls && cls->openable && host.props.get(kIsOpen) == 0;
  };
  std::vector<ObjectId> reachable_items;
  for (const ObjectId& id : items)
    if (!inside_closed(id)) reachable_items.push_back(id);
  std::sort(reachable_items.begin(), reachable_items.end());

  const char* kTemplates[4] = {"consolidate", "dispose", "power_down", "fetch"};
  std::string tpl = p.task_template;
  int rotate = static_cast<int>(task_rng.bounded(4));
  std::vector<ObjectId> targets;
  for (int attempt = 0; attempt < 4 && targets.empty(); ++attempt) {
    if (p.task_template.empty()) tpl = kTemplates[(rotate + attempt) % 4];
    if (tpl == "consolidate") {
      std::map<std::string, std::vector<ObjectId>> by_class;
      for (const ObjectId& id : reachable_items) by_class[w.objects.at(id).type].push_back(id);
      std::vector<std::string> classes;
      for (const auto& [cls, ids] : by_class)
        if (ids.size() >= 2) classes.push_back(cls);
      if (classes.empty()) continue;
      const std::string cls = classes[task_rng.bounded(classes.size())];
      const ObjectId dest = surfaces[task_rng.bounded(surfaces.size())];
      Predicate pr;
      pr.kind = PredKind::ObjectInReceptacle;
      pr.object_class = cls;
      pr.receptacle = dest;
      sc.task.goal = {pr};
      sc.task.description = "consolidate every " + cls + " onto " + dest;
      for (const ObjectId& id : by_class.at(cls))
        if (w.objects.at(id).rec != std::optional<ObjectId>(dest)) targets.push_back(id);
    } else if (tpl == "dispose") {
      std::vector<ObjectId> perishable;
      for (const ObjectId& id : reachable_items) {
        const ObjectClass* cls = find_class(w.objects.at(id).type);
        if (cls && cls->perishable) perishable.push_back(id);
      }
      if (perishable.empty()) continue;
      const std::size_t n = std::min<std::size_t>(3, perishable.size());
      sc.task.goal.clear();
      for (std::size_t i = 0; i < n; ++i) {
        Predicate pr;
        pr.kind = PredKind::ObjectInReceptacle;
        pr.object = perishable[i];
        pr.receptacle_class = "GarbageCan";
        sc.task.goal.push_back(pr);
        targets.push_back(perishable[i]);
      }
      sc.task.description = "dispose of the perishables before they turn";
    } else if (tpl == "power_down") {
      const std::size_t n = std::min<std::size_t>(3, devices.size());
      if (n == 0) continue;
      sc.task.goal.clear();
      for (std::size_t i = 0; i < n; ++i) {
        w.objects.at(devices[i]).props.set(kIsToggled, 1);  // so there is work
        Predicate pr;
        pr.kind = PredKind::PropertyIs;
        pr.object = devices[i];
        pr.prop = kIsToggled;
        pr.value = 0;
        sc.task.goal.push_back(pr);
        targets.push_back(devices[i]);
      }
      sc.task.description = "power down the devices left running";
    } else {
      if (reachable_items.empty()) continue;
      const ObjectId obj = reachable_items[task_rng.bounded(reachable_items.size())];
      const ObjectId dest = surfaces[task_rng.bounded(surfaces.size())];
      Predicate pr;
      pr.kind = PredKind::ObjectInReceptacle;
      pr.object = obj;
      pr.receptacle = dest;
      sc.task.goal = {pr};
      sc.task.description = "bring " + obj + " to " + dest;
      if (w.objects.at(obj).rec != std::optional<ObjectId>(dest)) targets.push_back(obj);
    }
  }
  if (targets.empty()) throw GenerationError("no feasible task template for this scene");

  // at least half the targets must start outside every initial field of
  // view, or discovery would be free
  std::set<Cell> seen;
  for (const RobotState& r : poses) {
    auto cells = visible_cells(w, r.pose.cell, r.pose.theta, 60.0, 12);
    seen.insert(cells.begin(), cells.end());
  }
  auto hidden_count = [&] {
    int n = 0;
    for (const ObjectId& id : targets)
      if (!seen.count(*w.objects.at(id).pos)) ++n;
    return n;
  };
  const int need = (static_cast<int>(targets.size()) + 1) / 2;
  for (int tries = 0; hidden_count() < need; ++tries) {
    if (tries >= 40) throw GenerationError("could not hide enough task targets");
    std::vector<Cell> unseen_free;
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x) {
        Cell c{x, y};
        if (!seen.count(c) && !occupied.count(c)) unseen_free.push_back(c);
      }
    if (unseen_free.empty()) throw GenerationError("robots see the whole scene");
    // relocate the first visible target
    for (const ObjectId& id : targets) {
      ObjectState& o = w.objects.at(id);
      if (seen.count(*o.pos)) {
        if (!o.rec) occupied.erase(*o.pos);
        o.rec.reset();
        o.pos = unseen_free[task_rng.bounded(unseen_free.size())];
        o.room = w.room_of(*o.pos);
        occupied.insert(*o.pos);
        break;
      }
    }
  }

  if (p.relocation_tick > 0) {
    std::vector<Cell> free;
    const AreaId start_room = w.objects.at(targets.front()).room;
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x) {
        Cell c{x, y};
        if (!occupied.count(c) && w.room_of(c) != start_room) free.push_back(c);
      }
    if (free.empty()) throw GenerationError("nowhere to relocate the target");
    const Cell to = free[task_rng.bounded(free.size())];
    sc.events.push_back({p.relocation_tick, targets.front(), to, w.room_of(to), std::nullopt});
  }

  sc.cameras = place_cameras(w, p.coverage, p.camera_budget, 12, 60.0, 5, nullptr);
  for (const auto& [id, o] : w.objects) {
    const ObjectClass* cls = find_class(o.type);
    if (!cls) continue;
    if (cls->toggleable || (cls->openable && !cls->pickupable))
      sc.reporters.push_back({"sr_" + id, id, 5});
  }

  return sc;
}

}  // namespace r2x
