#include "r2x/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <tuple>

#include <json.hpp>

#include "r2x/grid_world.hpp"
#include "r2x/scenario.hpp"

namespace r2x {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::FetchAndPlace: return "fetch_and_place";
    case NodeKind::ToggleDevice: return "toggle_device";
    case NodeKind::OpenClose: return "open_close";
    case NodeKind::SliceObject: return "slice_object";
    case NodeKind::Dispose: return "dispose";
    case NodeKind::NavigateTo: return "navigate_to";
    case NodeKind::ExploreRoom: return "explore_room";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(const std::string& s) {
  static const std::map<std::string, NodeKind> m = {
      {"fetch_and_place", NodeKind::FetchAndPlace},
      {"toggle_device", NodeKind::ToggleDevice},
      {"open_close", NodeKind::OpenClose},
      {"slice_object", NodeKind::SliceObject},
      {"dispose", NodeKind::Dispose},
      {"navigate_to", NodeKind::NavigateTo},
      {"explore_room", NodeKind::ExploreRoom},
  };
  auto it = m.find(s);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

const char* to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::PENDING: return "PENDING";
    case NodeStatus::RUNNING: return "RUNNING";
    case NodeStatus::DONE: return "DONE";
    case NodeStatus::FAILED: return "FAILED";
  }
  return "?";
}

bool PlanGraph::all_terminal() const {
  for (const auto& [id, n] : nodes) {
    if (n.status != NodeStatus::DONE && n.status != NodeStatus::FAILED) return false;
  }
  return true;
}

bool PlanGraph::all_done() const {
  for (const auto& [id, n] : nodes) {
    if (n.status != NodeStatus::DONE) return false;
  }
  return true;
}

std::vector<std::string> PlanGraph::ready_nodes() const {
  std::vector<std::string> out;
  for (const auto& [id, n] : nodes) {
    if (n.status != NodeStatus::PENDING) continue;
    bool ready = true;
    for (const auto& [a, b] : edges) {
      if (b != id) continue;
      auto it = nodes.find(a);
      if (it != nodes.end() && it->second.status != NodeStatus::DONE) {
        ready = false;
        break;
      }
    }
    if (ready) out.push_back(id);
  }
  return out;  // map iteration is already id-sorted
}

SkillSet default_req_skills(NodeKind kind, const std::map<std::string, std::string>& params) {
  switch (kind) {
    case NodeKind::FetchAndPlace:
    case NodeKind::Dispose:
      return {ActionKind::Pickup, ActionKind::Put};
    case NodeKind::ToggleDevice: {
      auto it = params.find("value");
      if (it != params.end() && it->second == "0") return {ActionKind::ToggleOff};
      return {ActionKind::ToggleOn};
    }
    case NodeKind::OpenClose: {
      auto it = params.find("value");
      if (it != params.end() && it->second == "0") return {ActionKind::Close};
      return {ActionKind::Open};
    }
    case NodeKind::SliceObject:
      return {ActionKind::Pickup, ActionKind::Slice};
    case NodeKind::NavigateTo:
    case NodeKind::ExploreRoom:
      return {ActionKind::MoveStep};
  }
  return {};
}

double phi_requirement(NodeKind kind) {
  switch (kind) {
    case NodeKind::FetchAndPlace:
    case NodeKind::Dispose:
    case NodeKind::SliceObject:
      return 30.0;  // table-height work
    case NodeKind::ToggleDevice:
    case NodeKind::OpenClose:
      return 15.0;
    case NodeKind::NavigateTo:
    case NodeKind::ExploreRoom:
      return 0.0;
  }
  return 0.0;
}

namespace {

constexpr int kMaxPlanNodes = 32;
constexpr int kInfDist = 1 << 29;

bool has_cycle(const PlanGraph& g, std::string* witness) {
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::function<bool(const std::string&)> visit = [&](const std::string& u) -> bool {
    color[u] = 1;
    for (const auto& [a, b] : g.edges) {
      if (a != u || !g.nodes.count(b)) continue;
      if (color[b] == 1) {
        if (witness) *witness = b;
        return true;
      }
      if (color[b] == 0 && visit(b)) return true;
    }
    color[u] = 2;
    return false;
  };
  for (const auto& [id, n] : g.nodes) {
    if (color[id] == 0 && visit(id)) return true;
  }
  return false;
}

bool needs_param(const ActionNode& n, const char* key) { return n.params.count(key) == 0; }

// Cells a node's work is anchored to, for travel scoring.
std::set<Cell> node_goal_cells(const ActionNode& n, const SemanticState& s,
                               const GridWorld& map) {
  std::set<Cell> out;
  auto object_anchor = [&](const std::string& key) {
    auto it = n.params.find(key);
    if (it == n.params.end()) return;
    const ObjectState* o = s.object(it->second);
    if (!o || !o->pos) return;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        Cell c{o->pos->x + dx, o->pos->y + dy};
        if (map.in_bounds(c)) out.insert(c);
      }
  };
  switch (n.kind) {
    case NodeKind::FetchAndPlace:
    case NodeKind::Dispose:
    case NodeKind::SliceObject:
    case NodeKind::ToggleDevice:
    case NodeKind::OpenClose:
      object_anchor("object");
      break;
    case NodeKind::NavigateTo: {
      auto room = n.params.find("room");
      if (room != n.params.end()) {
        auto it = s.areas.find(room->second);
        if (it != s.areas.end())
          out.insert(it->second.area.cells.begin(), it->second.area.cells.end());
      } else {
        object_anchor("object");
      }
      break;
    }
    case NodeKind::ExploreRoom: {
      auto room = n.params.find("room");
      if (room == n.params.end()) break;
      auto it = s.areas.find(room->second);
      if (it == s.areas.end()) break;
      for (const Cell& c : it->second.area.cells) {
        if (!it->second.seen.count(c)) out.insert(c);
      }
      break;
    }
  }
  return out;
}

int travel_distance(const GridWorld& map, const Cell& from, const std::set<Cell>& goals) {
  if (goals.empty()) return 0;
  auto path = plan_path_to_any(map, from, goals);
  if (!path) return kInfDist;
  return static_cast<int>(path->size()) - 1;
}

// 0 = already holds what the node needs, 1 = empty-handed, 2 = busy hands.
int inventory_rank(const ActionNode& n, const SemanticState& s, const RobotState& r) {
  if (!r.inventory) return 1;
  switch (n.kind) {
    case NodeKind::FetchAndPlace:
    case NodeKind::Dispose: {
      auto it = n.params.find("object");
      if (it != n.params.end() && *r.inventory == it->second) return 0;
      break;
    }
    case NodeKind::SliceObject: {
      const ObjectState* held = s.object(*r.inventory);
      if (held && held->type == "Knife") return 0;
      break;
    }
    default:
      break;
  }
  return 2;
}

}  // namespace

PlanValidation validate_plan(const PlanGraph& g, const SemanticState& s) {
  if (static_cast<int>(g.nodes.size()) > kMaxPlanNodes)
    return {false, "plan exceeds the node budget"};
  for (const auto& [a, b] : g.edges) {
    if (!g.nodes.count(a)) return {false, "edge references unknown node " + a};
    if (!g.nodes.count(b)) return {false, "edge references unknown node " + b};
    if (a == b) return {false, "self edge on node " + a};
  }
  std::string witness;
  if (has_cycle(g, &witness)) return {false, "dependency cycle involving " + witness};

  for (const auto& [id, n] : g.nodes) {
    auto require = [&](const char* key) -> std::optional<PlanValidation> {
      if (needs_param(n, key))
        return PlanValidation{false, "node " + id + " misses param " + key};
      return std::nullopt;
    };
    auto known_object = [&](const char* key) -> std::optional<PlanValidation> {
      const std::string& oid = n.params.at(key);
      if (!s.knows_object(oid))
        return PlanValidation{false, "node " + id + " targets unknown object " + oid};
      return std::nullopt;
    };
    auto known_room = [&](const char* key) -> std::optional<PlanValidation> {
      if (!s.areas.count(n.params.at(key)))
        return PlanValidation{false, "node " + id + " targets unknown room " + n.params.at(key)};
      return std::nullopt;
    };
    std::optional<PlanValidation> bad;
    switch (n.kind) {
      case NodeKind::FetchAndPlace:
        if ((bad = require("object")) || (bad = known_object("object"))) return *bad;
        if (!n.params.count("receptacle") && !n.params.count("room"))
          return {false, "node " + id + " needs a receptacle or room"};
        if (n.params.count("receptacle") && (bad = known_object("receptacle"))) return *bad;
        if (n.params.count("room") && (bad = known_room("room"))) return *bad;
        break;
      case NodeKind::Dispose:
        if ((bad = require("object")) || (bad = known_object("object"))) return *bad;
        if ((bad = require("receptacle")) || (bad = known_object("receptacle"))) return *bad;
        break;
      case NodeKind::ToggleDevice:
      case NodeKind::OpenClose: {
        if ((bad = require("object")) || (bad = known_object("object"))) return *bad;
        if ((bad = require("value"))) return *bad;
        const std::string& v = n.params.at("value");
        if (v != "0" && v != "1") return {false, "node " + id + " has a bad value param"};
        break;
      }
      case NodeKind::SliceObject:
        if ((bad = require("object")) || (bad = known_object("object"))) return *bad;
        if (n.params.count("knife") && (bad = known_object("knife"))) return *bad;
        break;
      case NodeKind::NavigateTo:
        if (!n.params.count("room") && !n.params.count("object"))
          return {false, "node " + id + " needs a room or object"};
        if (n.params.count("room") && (bad = known_room("room"))) return *bad;
        if (n.params.count("object") && (bad = known_object("object"))) return *bad;
        break;
      case NodeKind::ExploreRoom:
        if ((bad = require("room")) || (bad = known_room("room"))) return *bad;
        break;
    }

    bool satisfiable = false;
    for (const auto& [rid, r] : s.robots) {
      if (n.r_pref && *n.r_pref != rid) continue;
      if (std::includes(r.skills.begin(), r.skills.end(), n.req_skills.begin(),
                        n.req_skills.end())) {
        satisfiable = true;
        break;
      }
    }
    if (!satisfiable) {
      if (n.r_pref && !s.robots.count(*n.r_pref))
        return {false, "node " + id + " prefers unknown robot " + *n.r_pref};
      return {false, "no robot provides the skills for node " + id};
    }
  }
  return {true, ""};
}

std::optional<RobotId> match_robot(const ActionNode& node, const SemanticState& s,
                                   const GridWorld& map) {
  auto eligible = [&](const RobotId& id, const RobotState& r) {
    if (r.sigma != RobotStatus::IDLE) return false;
    if (node.r_pref && *node.r_pref != id) return false;
    return std::includes(r.skills.begin(), r.skills.end(), node.req_skills.begin(),
                         node.req_skills.end());
  };

  // When a fleet robot already holds what the node needs, nobody else can
  // take it out of their hands; that robot wins outright if eligible.
  std::string needed;
  if (node.kind == NodeKind::FetchAndPlace || node.kind == NodeKind::Dispose) {
    auto it = node.params.find("object");
    if (it != node.params.end()) needed = it->second;
  } else if (node.kind == NodeKind::SliceObject) {
    auto it = node.params.find("knife");
    if (it != node.params.end()) needed = it->second;
  }
  if (!needed.empty()) {
    const ObjectState* o = s.object(needed);
    if (o && o->rec) {
      auto holder = s.robots.find(*o->rec);
      if (holder != s.robots.end() && eligible(holder->first, holder->second))
        return holder->first;
    }
  }

  const std::set<Cell> goals = node_goal_cells(node, s, map);
  std::optional<RobotId> best;
  std::tuple<int, int, double, RobotId> best_score;
  for (const auto& [id, r] : s.robots) {
    if (!eligible(id, r)) continue;
    std::tuple<int, int, double, RobotId> score{
        travel_distance(map, r.pose.cell, goals), inventory_rank(node, s, r),
        std::fabs(phi_requirement(node.kind) - r.pose.phi), id};
    if (!best || score < best_score) {
      best = id;
      best_score = score;
    }
  }
  return best;
}

namespace {

std::string format_node_id(int counter) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "n%02d", counter);
  return buf;
}

// Nearest believed instance of a class to an anchor cell; ties on id.
std::optional<ObjectId> nearest_instance(const SemanticState& s, const GridWorld& map,
                                         const std::string& cls,
                                         const std::optional<Cell>& anchor) {
  std::optional<ObjectId> best;
  std::pair<int, ObjectId> best_key{kInfDist + 1, ""};
  for (const auto& [id, rec] : s.objects) {
    if (rec.state.type != cls) continue;
    // status reports can introduce objects nobody has located yet; those
    // cannot serve as action targets
    if (!rec.state.pos) continue;
    int d = kInfDist;
    if (anchor && rec.state.pos) {
      auto path = plan_path(map, *anchor, *rec.state.pos);
      if (path) d = static_cast<int>(path->size()) - 1;
    }
    std::pair<int, ObjectId> key{d, id};
    if (!best || key < best_key) {
      best = id;
      best_key = key;
    }
  }
  return best;
}

}  // namespace

PlanOutcome baseline_plan(const SemanticState& s, const GoalCondition& goal,
                          const GridWorld& map, const std::string& task_description,
                          int max_nodes) {
  PlanOutcome out;
  const std::string prompt = build_prompt(s, goal, task_description, max_nodes);
  out.prompt_tokens = token_proxy_for(prompt);

  PlanGraph g;
  int counter = 0;
  bool explore_demand = false;
  std::map<ObjectId, std::string> open_nodes;  // receptacle -> emitted open node
  std::string prev_slice;

  auto add_node = [&](NodeKind kind, std::map<std::string, std::string> params,
                      std::optional<RobotId> r_pref = std::nullopt) -> std::string {
    if (counter >= max_nodes) return "";
    ActionNode n;
    n.id = format_node_id(++counter);
    n.kind = kind;
    n.params = std::move(params);
    n.req_skills = default_req_skills(kind, n.params);
    n.r_pref = std::move(r_pref);
    g.nodes[n.id] = n;
    return n.id;
  };

  // A fetch-like node whose target sits in a believed-closed receptacle gets
  // an opener node and a dependency edge; openers are shared.
  auto open_dependency = [&](const ObjectId& target, const std::string& consumer) {
    const ObjectState* o = s.object(target);
    if (!o || !o->rec || s.robots.count(*o->rec)) return;
    const ObjectState* container = s.object(*o->rec);
    if (!container) return;
    const ObjectClass* cls = find_class(container->type);
    if (!cls || !cls->openable || container->props.get(kIsOpen) != 0) return;
    auto it = open_nodes.find(container->id);
    std::string opener;
    if (it != open_nodes.end()) {
      opener = it->second;
    } else {
      opener = add_node(NodeKind::OpenClose, {{"object", container->id}, {"value", "1"}});
      if (opener.empty()) return;
      open_nodes[container->id] = opener;
    }
    if (!consumer.empty()) g.edges.insert({opener, consumer});
  };

  auto resolve_targets = [&](const Predicate& p) {
    std::vector<ObjectId> ids;
    if (!p.object.empty()) {
      if (s.knows_object(p.object)) ids.push_back(p.object);
    } else {
      for (const auto& [id, rec] : s.objects) {
        if (rec.state.type == p.object_class) ids.push_back(id);
      }
    }
    return ids;
  };

  for (const Predicate& p : goal) {
    if (eval_predicate(s, p)) continue;
    switch (p.kind) {
      case PredKind::RobotInRoom: {
        add_node(NodeKind::NavigateTo, {{"room", p.room}}, p.robot);
        break;
      }
      case PredKind::PropertyIs: {
        std::vector<ObjectId> targets = resolve_targets(p);
        if (targets.empty()) {
          explore_demand = true;
          break;
        }
        for (const ObjectId& id : targets) {
          const ObjectState& st = s.objects.at(id).state;
          if (st.props.get(p.prop) == p.value) continue;
          if (!st.pos) {
            explore_demand = true;  // known from a status report, not yet located
            continue;
          }
          if (p.prop == kIsToggled) {
            add_node(NodeKind::ToggleDevice,
                     {{"object", id}, {"value", std::to_string(p.value)}});
          } else if (p.prop == kIsOpen) {
            add_node(NodeKind::OpenClose, {{"object", id}, {"value", std::to_string(p.value)}});
          } else if (p.prop == kIsSliced && p.value == 1) {
            auto knife = nearest_instance(s, map, "Knife", st.pos);
            if (!knife) {
              explore_demand = true;
              continue;
            }
            std::string node =
                add_node(NodeKind::SliceObject, {{"object", id}, {"knife", *knife}});
            if (node.empty()) continue;
            open_dependency(id, node);
            // one knife travels: serialize slice work
            if (!prev_slice.empty()) g.edges.insert({prev_slice, node});
            prev_slice = node;
          } else {
            out.error = "no_feasible_action";
            out.plan = PlanGraph{};
            return out;  // no primitive establishes this property
          }
        }
        break;
      }
      case PredKind::ObjectInReceptacle: {
        std::vector<ObjectId> targets = resolve_targets(p);
        if (targets.empty()) {
          explore_demand = true;
          break;
        }
        for (const ObjectId& id : targets) {
          Predicate single = p;
          single.object = id;
          single.object_class.clear();
          if (eval_predicate(s, single)) continue;
          if (!s.objects.at(id).state.pos) {
            explore_demand = true;
            continue;
          }
          std::optional<ObjectId> dest;
          if (!p.receptacle.empty()) {
            if (s.knows_object(p.receptacle) && s.objects.at(p.receptacle).state.pos)
              dest = p.receptacle;
          } else {
            dest = nearest_instance(s, map, p.receptacle_class, s.objects.at(id).state.pos);
          }
          if (!dest) {
            explore_demand = true;
            continue;
          }
          NodeKind kind = p.receptacle_class == "GarbageCan" ? NodeKind::Dispose
                                                             : NodeKind::FetchAndPlace;
          std::string node = add_node(kind, {{"object", id}, {"receptacle", *dest}});
          if (!node.empty()) open_dependency(id, node);
        }
        break;
      }
      case PredKind::ObjectInRoom: {
        std::vector<ObjectId> targets = resolve_targets(p);
        if (targets.empty()) {
          explore_demand = true;
          break;
        }
        for (const ObjectId& id : targets) {
          const ObjectState& st = s.objects.at(id).state;
          if (st.room == p.room) continue;
          if (!st.pos) {
            explore_demand = true;
            continue;
          }
          std::string node =
              add_node(NodeKind::FetchAndPlace, {{"object", id}, {"room", p.room}});
          if (!node.empty()) open_dependency(id, node);
        }
        break;
      }
    }
  }

  if (explore_demand) {
    // unexplored rooms ordered by travel distance from the closest idle
    // robot (any robot when none is idle), then by id
    std::vector<std::pair<int, AreaId>> rooms;
    for (const auto& [aid, ba] : s.areas) {
      if (ba.area.explored >= 1.0) continue;
      int best = kInfDist;
      bool any_idle = false;
      for (const auto& [rid, r] : s.robots) {
        if (r.sigma == RobotStatus::IDLE) any_idle = true;
      }
      for (const auto& [rid, r] : s.robots) {
        if (any_idle && r.sigma != RobotStatus::IDLE) continue;
        std::set<Cell> goals(ba.area.cells.begin(), ba.area.cells.end());
        int d = travel_distance(map, r.pose.cell, goals);
        best = std::min(best, d);
      }
      rooms.push_back({best, aid});
    }
    std::sort(rooms.begin(), rooms.end());
    for (const auto& [d, aid] : rooms) add_node(NodeKind::ExploreRoom, {{"room", aid}});
    if (rooms.empty() && g.nodes.empty()) {
      out.error = "no_feasible_action";  // everything explored, targets still missing
      return out;
    }
  }

  out.ok = true;
  out.plan = std::move(g);
  nlohmann::ordered_json response = plan_to_json(out.plan);
  out.completion_tokens = token_proxy_for(response.dump());
  return out;
}

std::string build_prompt(const SemanticState& s, const GoalCondition& goal,
                         const std::string& task_description, int max_nodes) {
  nlohmann::ordered_json j;
  j["format"] = "plan-request/1";
  j["task"] = task_description;
  j["goal"] = goal_to_json(goal);
  j["state"] = nlohmann::ordered_json::parse(serialize_state(s));
  auto& fleet = j["fleet"] = nlohmann::ordered_json::array();
  for (const auto& [id, r] : s.robots) {
    nlohmann::ordered_json e;
    e["id"] = id;
    e["cell"] = {r.pose.cell.x, r.pose.cell.y};
    e["status"] = to_string(r.sigma);
    auto& sk = e["skills"] = nlohmann::ordered_json::array();
    for (ActionKind k : r.skills) sk.push_back(to_string(k));
    fleet.push_back(std::move(e));
  }
  j["max_nodes"] = max_nodes;
  j["actions"] = {"fetch_and_place", "toggle_device", "open_close", "slice_object",
                  "dispose",         "navigate_to",   "explore_room"};
  j["response_schema"] = {
      {"nodes",
       {{{"id", "n01"},
         {"action", "fetch_and_place"},
         {"params", {{"object", "apple_1"}, {"receptacle", "fridge_1"}}},
         {"req_skills", {"Pickup", "Put"}},
         {"r_pref", nullptr}}}},
      {"edges", nlohmann::ordered_json::array()}};
  return j.dump();
}

long token_proxy_for(const std::string& text) {
  return static_cast<long>((text.size() + 3) / 4);
}

}  // namespace r2x
