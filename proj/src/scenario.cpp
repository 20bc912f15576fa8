#include "r2x/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "r2x/errors.hpp"

namespace r2x {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json cell_json(const Cell& c) { return ordered_json::array({c.x, c.y}); }

Cell cell_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("cell must be [x, y]");
  return Cell{j[0].get<int>(), j[1].get<int>()};
}

int prop_index(const std::string& name) {
  for (int i = 0; i < kNumProps; ++i) {
    if (name == kPropNames[i]) return i;
  }
  return -1;
}

}  // namespace

nlohmann::ordered_json goal_to_json(const GoalCondition& goal) {
  ordered_json arr = ordered_json::array();
  for (const Predicate& p : goal) {
    ordered_json o;
    switch (p.kind) {
      case PredKind::ObjectInRoom:
        o["kind"] = "object_in_room";
        if (!p.object.empty()) o["object"] = p.object;
        if (!p.object_class.empty()) o["object_class"] = p.object_class;
        o["room"] = p.room;
        break;
      case PredKind::ObjectInReceptacle:
        o["kind"] = "object_in_receptacle";
        if (!p.object.empty()) o["object"] = p.object;
        if (!p.object_class.empty()) o["object_class"] = p.object_class;
        if (!p.receptacle.empty()) o["receptacle"] = p.receptacle;
        if (!p.receptacle_class.empty()) o["receptacle_class"] = p.receptacle_class;
        break;
      case PredKind::PropertyIs:
        o["kind"] = "property_is";
        if (!p.object.empty()) o["object"] = p.object;
        if (!p.object_class.empty()) o["object_class"] = p.object_class;
        o["prop"] = kPropNames[p.prop];
        o["value"] = p.value;
        break;
      case PredKind::RobotInRoom:
        o["kind"] = "robot_in_room";
        o["robot"] = p.robot;
        o["room"] = p.room;
        break;
    }
    arr.push_back(std::move(o));
  }
  return arr;
}

GoalCondition goal_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw MalformedGoalError("goal must be an array of predicates");
  GoalCondition goal;
  for (const auto& o : j) {
    Predicate p;
    const std::string kind = o.value("kind", "");
    p.object = o.value("object", "");
    p.object_class = o.value("object_class", "");
    if (kind == "object_in_room") {
      p.kind = PredKind::ObjectInRoom;
      p.room = o.value("room", "");
      if (p.room.empty()) throw MalformedGoalError("object_in_room needs a room");
    } else if (kind == "object_in_receptacle") {
      p.kind = PredKind::ObjectInReceptacle;
      p.receptacle = o.value("receptacle", "");
      p.receptacle_class = o.value("receptacle_class", "");
      if (p.receptacle.empty() && p.receptacle_class.empty())
        throw MalformedGoalError("object_in_receptacle needs a receptacle or a class");
    } else if (kind == "property_is") {
      p.kind = PredKind::PropertyIs;
      p.prop = prop_index(o.value("prop", ""));
      if (p.prop < 0) throw MalformedGoalError("unknown property " + o.value("prop", ""));
      if (!o.contains("value") || !o["value"].is_number_integer())
        throw MalformedGoalError("property_is needs an integer value");
      p.value = o["value"].get<int>();
      if (p.value != 0 && p.value != 1) throw MalformedGoalError("property value must be 0 or 1");
    } else if (kind == "robot_in_room") {
      p.kind = PredKind::RobotInRoom;
      p.robot = o.value("robot", "");
      p.room = o.value("room", "");
      if (p.robot.empty() || p.room.empty())
        throw MalformedGoalError("robot_in_room needs robot and room");
    } else {
      throw MalformedGoalError("unknown predicate kind: " + kind);
    }
    if (p.kind != PredKind::RobotInRoom && p.object.empty() && p.object_class.empty())
      throw MalformedGoalError(kind + " needs an object or object_class");
    goal.push_back(std::move(p));
  }
  return goal;
}

nlohmann::ordered_json plan_to_json(const PlanGraph& g) {
  ordered_json j;
  auto& nodes = j["nodes"] = ordered_json::array();
  for (const auto& [id, n] : g.nodes) {
    ordered_json o;
    o["id"] = id;
    o["action"] = to_string(n.kind);
    auto& params = o["params"] = ordered_json::object();
    for (const auto& [k, v] : n.params) params[k] = v;
    auto& skills = o["req_skills"] = ordered_json::array();
    for (ActionKind k : n.req_skills) skills.push_back(to_string(k));
    if (n.r_pref) o["r_pref"] = *n.r_pref;
    nodes.push_back(std::move(o));
  }
  auto& edges = j["edges"] = ordered_json::array();
  for (const auto& [a, b] : g.edges) edges.push_back(ordered_json::array({a, b}));
  return j;
}

PlanGraph plan_from_json(const nlohmann::json& j) {
  PlanGraph g;
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
    throw SchemaError("plan needs a nodes array");
  for (const auto& o : j["nodes"]) {
    ActionNode n;
    if (!o.contains("id") || !o["id"].is_string()) throw SchemaError("node without id");
    n.id = o["id"].get<std::string>();
    if (n.id.empty()) throw SchemaError("empty node id");
    auto kind = node_kind_from_string(o.value("action", ""));
    if (!kind) throw SchemaError("unknown action: " + o.value("action", ""));
    n.kind = *kind;
    if (o.contains("params")) {
      if (!o["params"].is_object()) throw SchemaError("params must be an object");
      for (auto it = o["params"].begin(); it != o["params"].end(); ++it) {
        if (it.value().is_string()) {
          n.params[it.key()] = it.value().get<std::string>();
        } else if (it.value().is_number_integer()) {
          n.params[it.key()] = std::to_string(it.value().get<long>());
        } else {
          throw SchemaError("param " + it.key() + " must be a string or integer");
        }
      }
    }
    if (o.contains("req_skills")) {
      if (!o["req_skills"].is_array()) throw SchemaError("req_skills must be an array");
      for (const auto& s : o["req_skills"]) {
        auto k = action_kind_from_string(s.get<std::string>());
        if (!k) throw SchemaError("unknown skill: " + s.get<std::string>());
        n.req_skills.insert(*k);
      }
    } else {
      n.req_skills = default_req_skills(n.kind, n.params);
    }
    if (o.contains("r_pref") && !o["r_pref"].is_null())
      n.r_pref = o["r_pref"].get<std::string>();
    if (g.nodes.count(n.id)) throw SchemaError("duplicate node id: " + n.id);
    g.nodes[n.id] = std::move(n);
  }
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw SchemaError("edges must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2) throw SchemaError("edge must be [before, after]");
      g.edges.insert({e[0].get<std::string>(), e[1].get<std::string>()});
    }
  }
  return g;
}

nlohmann::ordered_json scenario_to_json(const Scenario& sc) {
  ordered_json j;
  j["format"] = "scenario/1";
  j["seeds"] = {{"scene", sc.scene_seed}, {"failure", sc.failure_seed}};

  ordered_json grid;
  grid["width"] = sc.world.width;
  grid["height"] = sc.world.height;
  grid["cell_size"] = sc.world.cell_size;
  auto& walls = grid["walls"] = ordered_json::array();
  for (const Cell& c : sc.world.walls.east_walls())
    walls.push_back(ordered_json::array({c.x, c.y, "E"}));
  for (const Cell& c : sc.world.walls.north_walls())
    walls.push_back(ordered_json::array({c.x, c.y, "N"}));
  j["grid"] = std::move(grid);

  auto& rooms = j["rooms"] = ordered_json::array();
  for (const Room& r : sc.world.rooms) {
    ordered_json o;
    o["id"] = r.id;
    o["name"] = r.name;
    auto& rects = o["rects"] = ordered_json::array();
    for (const auto& rr : sc.room_rects) {
      if (rr.id != r.id) continue;
      for (const auto& rect : rr.rects)
        rects.push_back(ordered_json::array({rect[0], rect[1], rect[2], rect[3]}));
    }
    rooms.push_back(std::move(o));
  }

  auto& doors = j["doors"] = ordered_json::array();
  for (const auto& d : sc.doors)
    doors.push_back(ordered_json::array({d[0], d[1], d[2] == 0 ? "E" : "N"}));

  auto& objects = j["objects"] = ordered_json::array();
  for (const auto& [id, o] : sc.world.objects) {
    ordered_json e;
    e["id"] = id;
    e["type"] = o.type;
    e["cell"] = cell_json(*o.pos);
    e["rec"] = o.rec ? ordered_json(*o.rec) : ordered_json(nullptr);
    e["room"] = o.room;
    auto& props = e["props"] = ordered_json::object();
    const ObjectClass* cls = find_class(o.type);
    for (int i = 0; i < kNumProps; ++i) {
      if (cls && (cls->applicable & prop_bit(i))) props[kPropNames[i]] = o.props.get(i);
    }
    objects.push_back(std::move(e));
  }

  auto& robots = j["robots"] = ordered_json::array();
  for (const auto& [id, r] : sc.world.robots) {
    ordered_json e;
    e["id"] = id;
    e["cell"] = cell_json(r.pose.cell);
    e["theta"] = r.pose.theta;
    e["phi"] = r.pose.phi;
    auto& skills = e["skills"] = ordered_json::array();
    for (ActionKind k : r.skills) skills.push_back(to_string(k));
    robots.push_back(std::move(e));
  }

  ordered_json devices;
  auto& cams = devices["cameras"] = ordered_json::array();
  for (const CameraSpec& c : sc.cameras) {
    ordered_json e;
    e["id"] = c.id;
    e["cell"] = cell_json(c.cell);
    e["yaw"] = c.yaw;
    e["range"] = c.range_cells;
    e["half_angle"] = c.half_angle_deg;
    e["period"] = c.period;
    cams.push_back(std::move(e));
  }
  auto& reps = devices["reporters"] = ordered_json::array();
  for (const ReporterSpec& r : sc.reporters) {
    ordered_json e;
    e["id"] = r.id;
    e["object"] = r.attached;
    e["period"] = r.period;
    reps.push_back(std::move(e));
  }
  j["devices"] = std::move(devices);

  j["task"] = {{"description", sc.task.description}, {"goal", goal_to_json(sc.task.goal)}};
  j["failure"] = {{"t_delay", sc.failure.t_delay},
                  {"p_omit", sc.failure.p_omit},
                  {"p_corrupt", sc.failure.p_corrupt}};

  auto& events = j["scripted_events"] = ordered_json::array();
  for (const ScriptedEvent& ev : sc.events) {
    ordered_json e;
    e["tick"] = ev.tick;
    e["object"] = ev.object;
    e["cell"] = cell_json(ev.cell);
    e["room"] = ev.room;
    e["rec"] = ev.rec ? ordered_json(*ev.rec) : ordered_json(nullptr);
    events.push_back(std::move(e));
  }
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "scenario/1") throw SchemaError("not a scenario/1 document");
  Scenario sc;
  try {
    sc.scene_seed = j.at("seeds").at("scene").get<std::uint64_t>();
    sc.failure_seed = j.at("seeds").at("failure").get<std::uint64_t>();
    sc.world.width = j.at("grid").at("width").get<int>();
    sc.world.height = j.at("grid").at("height").get<int>();
    sc.world.cell_size = j.at("grid").at("cell_size").get<double>();
    for (const auto& w : j.at("grid").at("walls")) {
      Cell c{w.at(0).get<int>(), w.at(1).get<int>()};
      const std::string dir = w.at(2).get<std::string>();
      if (dir == "E") {
        sc.world.walls.block_east(c);
      } else if (dir == "N") {
        sc.world.walls.block_north(c);
      } else {
        throw SchemaError("wall direction must be E or N");
      }
    }
    for (const auto& ro : j.at("rooms")) {
      Room room;
      room.id = ro.at("id").get<std::string>();
      room.name = ro.value("name", room.id);
      RoomRects rr;
      rr.id = room.id;
      for (const auto& re : ro.at("rects")) {
        std::array<int, 4> rect{re.at(0).get<int>(), re.at(1).get<int>(), re.at(2).get<int>(),
                                re.at(3).get<int>()};
        rr.rects.push_back(rect);
        for (int y = rect[1]; y <= rect[3]; ++y)
          for (int x = rect[0]; x <= rect[2]; ++x) room.cells.push_back({x, y});
      }
      std::sort(room.cells.begin(), room.cells.end());
      room.cells.erase(std::unique(room.cells.begin(), room.cells.end()), room.cells.end());
      sc.world.rooms.push_back(std::move(room));
      sc.room_rects.push_back(std::move(rr));
    }
    if (j.contains("doors")) {
      for (const auto& d : j.at("doors")) {
        sc.doors.push_back({d.at(0).get<int>(), d.at(1).get<int>(),
                            d.at(2).get<std::string>() == "E" ? 0 : 1});
      }
    }
    for (const auto& o : j.at("objects")) {
      ObjectState st;
      st.id = o.at("id").get<std::string>();
      st.type = o.at("type").get<std::string>();
      st.pos = cell_from(o.at("cell"));
      if (!o.at("rec").is_null()) st.rec = o.at("rec").get<std::string>();
      st.room = o.at("room").get<std::string>();
      if (o.contains("props")) {
        for (auto it = o["props"].begin(); it != o["props"].end(); ++it) {
          int idx = prop_index(it.key());
          if (idx < 0) throw SchemaError("unknown property: " + it.key());
          st.props.set(idx, static_cast<std::uint8_t>(it.value().get<int>()));
        }
      }
      if (sc.world.objects.count(st.id)) throw SchemaError("duplicate object id: " + st.id);
      sc.world.objects[st.id] = std::move(st);
    }
    for (const auto& r : j.at("robots")) {
      RobotState rs;
      rs.id = r.at("id").get<std::string>();
      rs.pose.cell = cell_from(r.at("cell"));
      rs.pose.theta = r.value("theta", 0.0);
      rs.pose.phi = r.value("phi", 0.0);
      for (const auto& s : r.at("skills")) {
        auto k = action_kind_from_string(s.get<std::string>());
        if (!k) throw SchemaError("unknown skill: " + s.get<std::string>());
        rs.skills.insert(*k);
      }
      if (sc.world.robots.count(rs.id)) throw SchemaError("duplicate robot id: " + rs.id);
      sc.world.robots[rs.id] = std::move(rs);
    }
    if (j.contains("devices")) {
      for (const auto& c : j["devices"].value("cameras", json::array())) {
        CameraSpec cs;
        cs.id = c.at("id").get<std::string>();
        cs.cell = cell_from(c.at("cell"));
        cs.yaw = c.value("yaw", 0.0);
        cs.range_cells = c.value("range", 12);
        cs.half_angle_deg = c.value("half_angle", 60.0);
        cs.period = c.value("period", 5);
        sc.cameras.push_back(std::move(cs));
      }
      for (const auto& r : j["devices"].value("reporters", json::array())) {
        ReporterSpec rs;
        rs.id = r.at("id").get<std::string>();
        rs.attached = r.at("object").get<std::string>();
        rs.period = r.value("period", 5);
        sc.reporters.push_back(std::move(rs));
      }
    }
    sc.task.description = j.at("task").value("description", "");
    sc.task.goal = goal_from_json(j.at("task").at("goal"));
    if (j.contains("failure")) {
      sc.failure.t_delay = j["failure"].value("t_delay", 0);
      sc.failure.p_omit = j["failure"].value("p_omit", 0.0);
      sc.failure.p_corrupt = j["failure"].value("p_corrupt", 0.0);
    }
    for (const auto& e : j.value("scripted_events", json::array())) {
      ScriptedEvent ev;
      ev.tick = e.at("tick").get<Tick>();
      ev.object = e.at("object").get<std::string>();
      ev.cell = cell_from(e.at("cell"));
      ev.room = e.at("room").get<std::string>();
      if (e.contains("rec") && !e["rec"].is_null()) ev.rec = e["rec"].get<std::string>();
      sc.events.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scenario parse: ") + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write scenario file: " + path);
  out << scenario_to_json(sc).dump(2) << "\n";
}

std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> problems;
  const GridWorld& w = sc.world;
  if (w.width <= 0 || w.height <= 0) problems.push_back("grid has no cells");

  std::set<Cell> room_cells;
  for (const Room& r : w.rooms) {
    for (const Cell& c : r.cells) {
      if (!w.in_bounds(c)) problems.push_back("room " + r.id + " leaves the grid");
      if (!room_cells.insert(c).second)
        problems.push_back("rooms overlap at " + std::to_string(c.x) + "," + std::to_string(c.y));
    }
  }
  if (static_cast<int>(room_cells.size()) != w.width * w.height)
    problems.push_back("rooms do not cover the grid");

  for (const auto& [id, o] : w.objects) {
    if (!o.pos || !w.in_bounds(*o.pos)) {
      problems.push_back("object " + id + " is out of bounds");
      continue;
    }
    if (w.room_of(*o.pos) != o.room) problems.push_back("object " + id + " has a wrong room");
    if (o.rec) {
      auto it = w.objects.find(*o.rec);
      if (it == w.objects.end()) {
        problems.push_back("object " + id + " sits in unknown receptacle " + *o.rec);
      } else {
        const ObjectClass* cls = find_class(it->second.type);
        if (!cls || !cls->receptacle)
          problems.push_back("object " + id + " sits in non-receptacle " + *o.rec);
        if (it->second.pos != o.pos)
          problems.push_back("object " + id + " is not at its receptacle's cell");
      }
    }
    if (!find_class(o.type)) problems.push_back("object " + id + " has unknown type " + o.type);
  }
  // containment must be acyclic
  for (const auto& [id, o] : w.objects) {
    std::optional<ObjectId> cur = o.rec;
    int hops = 0;
    while (cur && hops++ < 64) {
      if (*cur == id) {
        problems.push_back("containment cycle through " + id);
        break;
      }
      auto it = w.objects.find(*cur);
      cur = it == w.objects.end() ? std::nullopt : it->second.rec;
    }
  }

  std::set<Cell> robot_cells;
  for (const auto& [id, r] : w.robots) {
    if (!w.in_bounds(r.pose.cell)) problems.push_back("robot " + id + " is out of bounds");
    if (!robot_cells.insert(r.pose.cell).second)
      problems.push_back("robots share cell " + std::to_string(r.pose.cell.x) + "," +
                         std::to_string(r.pose.cell.y));
  }

  for (const CameraSpec& c : sc.cameras) {
    if (!w.in_bounds(c.cell)) problems.push_back("camera " + c.id + " is out of bounds");
  }
  for (const ReporterSpec& r : sc.reporters) {
    if (!w.objects.count(r.attached))
      problems.push_back("reporter " + r.id + " attached to unknown object " + r.attached);
  }
  for (const ScriptedEvent& e : sc.events) {
    if (!w.objects.count(e.object))
      problems.push_back("scripted event moves unknown object " + e.object);
    if (!w.in_bounds(e.cell)) problems.push_back("scripted event leaves the grid");
  }
  return problems;
}

}  // namespace r2x
