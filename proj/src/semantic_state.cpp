#include "r2x/semantic_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "r2x/errors.hpp"

namespace r2x {

AreaId SemanticState::area_of(const Cell& c) const {
  for (const auto& [id, ba] : areas) {
    if (std::binary_search(ba.area.cells.begin(), ba.area.cells.end(), c)) return id;
  }
  return {};
}

double SemanticState::explored_fraction(const AreaId& a) const {
  auto it = areas.find(a);
  if (it == areas.end() || it->second.area.cells.empty()) return 0.0;
  return static_cast<double>(it->second.seen.size()) /
         static_cast<double>(it->second.area.cells.size());
}

SemanticState init_state(const std::vector<RobotState>& robots, const std::vector<AreaDef>& areas,
                         const std::set<SourceId>& robot_sources,
                         const std::set<SourceId>& device_sources) {
  SemanticState s;
  for (const auto& r : robots) s.robots[r.id] = r;
  for (const auto& a : areas) {
    BeliefArea ba;
    ba.area.id = a.id;
    ba.area.name = a.name;
    ba.area.cells = a.cells;
    std::sort(ba.area.cells.begin(), ba.area.cells.end());
    s.areas[a.id] = std::move(ba);
  }
  s.robot_sources = robot_sources;
  s.device_sources = device_sources;
  return s;
}

namespace {

// True if setting `id`.rec = `target` would close a containment loop given
// the current records.
bool would_cycle(const SemanticState& s, const ObjectId& id, const ObjectId& target) {
  std::optional<ObjectId> cur = target;
  int guard = 0;
  while (cur && ++guard < 64) {
    if (*cur == id) return true;
    if (s.robots.count(*cur)) return false;
    auto it = s.objects.find(*cur);
    if (it == s.objects.end()) return false;
    cur = it->second.state.rec;
  }
  return false;
}

}  // namespace

FuseResult fuse(SemanticState& s, const Observation& obs) {
  int rank;
  if (s.robot_sources.count(obs.src)) {
    rank = 1;
  } else if (s.device_sources.count(obs.src)) {
    rank = 0;
  } else {
    throw UnknownSourceError(obs.src);
  }
  const WriteKey key{obs.tau, rank, obs.src};
  FuseResult res;

  for (const ObsEntry& e : obs.entries) {
    if (e.has_spatial && e.rec && !s.robots.count(*e.rec) && would_cycle(s, e.id, *e.rec)) {
      ++res.dropped_cycle;
      continue;
    }
    const bool existed = s.objects.count(e.id) > 0;
    ObjectRecord& rec = s.objects[e.id];
    const bool located = existed && rec.state.pos.has_value();
    bool accepted = false;
    bool changed = false;
    if (!existed) {
      rec.state.id = e.id;
      rec.state.type = e.type;
      res.discovered.push_back(e.id);
      accepted = changed = true;
    }
    if (e.has_spatial && key >= rec.spatial_key) {
      if (rec.state.pos != std::optional<Cell>(e.pos) || rec.state.rec != e.rec ||
          rec.state.room != e.room) {
        changed = true;
      }
      rec.state.pos = e.pos;
      rec.state.rec = e.rec;
      rec.state.room = e.room;
      rec.spatial_key = key;
      accepted = true;
    }
    const ObjectClass* cls = find_class(rec.state.type);
    const PropMask applicable = cls ? cls->applicable : static_cast<PropMask>(0x3f);
    for (int i = 0; i < kNumProps; ++i) {
      if (!(e.observed & prop_bit(i)) || !(applicable & prop_bit(i))) continue;
      if (key >= rec.prop_keys[i]) {
        if (rec.state.props.get(i) != e.props.get(i)) changed = true;
        rec.state.props.set(i, e.props.get(i));
        rec.prop_keys[i] = key;
        accepted = true;
      }
    }
    if (key > rec.key) rec.key = key;
    // a record seeded by a status report has no position; the first sighting
    // that pins it down is the discovery, not the report that named it
    if (existed && !located && rec.state.pos.has_value()) res.discovered.push_back(e.id);
    if (accepted) {
      ++res.applied;
    } else {
      ++res.stale;
    }
    if (changed) res.changed.push_back(e.id);
  }

  if (rank == 1) {
    for (const Cell& c : obs.visited_cells) {
      AreaId a = s.area_of(c);
      if (a.empty()) continue;
      BeliefArea& ba = s.areas.at(a);
      ba.seen.insert(c);
      ba.area.explored = static_cast<double>(ba.seen.size()) /
                         static_cast<double>(ba.area.cells.size());
    }
    if (obs.self_pose) {
      auto it = s.robots.find(obs.src);
      if (it != s.robots.end()) it->second.pose = *obs.self_pose;
    }
  }
  s.clock = std::max(s.clock, obs.tau);
  return res;
}

void apply_manipulation_effects(SemanticState& s, const RobotId& robot, const ActionStep& step,
                                Tick t) {
  const WriteKey key{t, 1, robot};
  auto robot_it = s.robots.find(robot);
  if (robot_it == s.robots.end()) return;
  RobotState& r = robot_it->second;

  auto touch_spatial = [&](ObjectRecord& rec, const Cell& pos, std::optional<ObjectId> container,
                           const AreaId& room) {
    if (key >= rec.spatial_key) {
      rec.state.pos = pos;
      rec.state.rec = std::move(container);
      rec.state.room = room;
      rec.spatial_key = key;
    }
    if (key > rec.key) rec.key = key;
  };
  auto touch_prop = [&](ObjectRecord& rec, int prop, std::uint8_t v) {
    if (key >= rec.prop_keys[prop]) {
      rec.state.props.set(prop, v);
      rec.prop_keys[prop] = key;
    }
    if (key > rec.key) rec.key = key;
  };

  switch (step.kind) {
    case ActionKind::MoveStep: {
      if (step.cell != r.pose.cell) {
        double ang = std::atan2(static_cast<double>(step.cell.y - r.pose.cell.y),
                                static_cast<double>(step.cell.x - r.pose.cell.x)) *
                     180.0 / std::numbers::pi_v<double>;
        r.pose.theta = normalize_deg(ang);
      }
      r.pose.cell = step.cell;
      if (r.inventory) {
        auto it = s.objects.find(*r.inventory);
        if (it != s.objects.end())
          touch_spatial(it->second, step.cell, robot, s.area_of(step.cell));
      }
      break;
    }
    case ActionKind::Rotate: {
      if (step.cell != r.pose.cell) {
        double ang = std::atan2(static_cast<double>(step.cell.y - r.pose.cell.y),
                                static_cast<double>(step.cell.x - r.pose.cell.x)) *
                     180.0 / std::numbers::pi_v<double>;
        r.pose.theta = normalize_deg(ang);
      }
      break;
    }
    case ActionKind::Pickup: {
      auto it = s.objects.find(step.target);
      if (it != s.objects.end())
        touch_spatial(it->second, r.pose.cell, robot, s.area_of(r.pose.cell));
      r.inventory = step.target;
      break;
    }
    case ActionKind::Put: {
      if (!r.inventory) break;
      auto held = s.objects.find(*r.inventory);
      auto target = s.objects.find(step.target);
      if (held != s.objects.end() && target != s.objects.end() && target->second.state.pos) {
        touch_spatial(held->second, *target->second.state.pos, step.target,
                      target->second.state.room);
      }
      r.inventory.reset();
      break;
    }
    case ActionKind::Open:
    case ActionKind::Close: {
      auto it = s.objects.find(step.target);
      if (it != s.objects.end())
        touch_prop(it->second, kIsOpen, step.kind == ActionKind::Open ? 1 : 0);
      break;
    }
    case ActionKind::ToggleOn:
    case ActionKind::ToggleOff: {
      auto it = s.objects.find(step.target);
      if (it != s.objects.end())
        touch_prop(it->second, kIsToggled, step.kind == ActionKind::ToggleOn ? 1 : 0);
      break;
    }
    case ActionKind::Slice: {
      auto it = s.objects.find(step.target);
      if (it != s.objects.end()) touch_prop(it->second, kIsSliced, 1);
      break;
    }
    case ActionKind::Scan:
      break;
  }
  if (t > s.clock) s.clock = t;
}

namespace {

double round4(double v) {
  double r = std::round(v * 10000.0) / 10000.0;
  return r == 0.0 ? 0.0 : r;  // avoid -0
}

}  // namespace

std::string serialize_state(const SemanticState& s) {
  nlohmann::ordered_json j;
  j["format"] = "world-state/1";
  j["clock"] = s.clock;
  auto& jr = j["robots"] = nlohmann::ordered_json::object();
  for (const auto& [id, r] : s.robots) {
    nlohmann::ordered_json o;
    o["cell"] = {r.pose.cell.x, r.pose.cell.y};
    o["theta"] = round4(r.pose.theta);
    o["phi"] = round4(r.pose.phi);
    o["inventory"] = r.inventory ? nlohmann::ordered_json(*r.inventory)
                                 : nlohmann::ordered_json(nullptr);
    auto& sk = o["skills"] = nlohmann::ordered_json::array();
    for (ActionKind k : r.skills) sk.push_back(to_string(k));
    o["status"] = to_string(r.sigma);
    jr[id] = std::move(o);
  }
  auto& jo = j["objects"] = nlohmann::ordered_json::object();
  for (const auto& [id, rec] : s.objects) {
    const ObjectState& st = rec.state;
    nlohmann::ordered_json o;
    o["type"] = st.type;
    o["cell"] = st.pos ? nlohmann::ordered_json({st.pos->x, st.pos->y})
                       : nlohmann::ordered_json(nullptr);
    o["rec"] = st.rec ? nlohmann::ordered_json(*st.rec) : nlohmann::ordered_json(nullptr);
    o["room"] = st.room;
    auto& props = o["props"] = nlohmann::ordered_json::object();
    const ObjectClass* cls = find_class(st.type);
    const PropMask mask = cls ? cls->applicable : static_cast<PropMask>(0x3f);
    for (int i = 0; i < kNumProps; ++i) {
      if (mask & prop_bit(i)) props[kPropNames[i]] = static_cast<int>(st.props.get(i));
    }
    o["src"] = rec.key.src;
    o["tau"] = rec.key.tau;
    jo[id] = std::move(o);
  }
  auto& ja = j["areas"] = nlohmann::ordered_json::object();
  for (const auto& [id, ba] : s.areas) {
    nlohmann::ordered_json o;
    o["name"] = ba.area.name;
    o["explored"] = round4(ba.area.explored);
    ja[id] = std::move(o);
  }
  return j.dump();
}

SemanticState parse_state(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(e.what());
  }
  if (j.value("format", "") != "world-state/1") throw SchemaError("bad format tag");
  SemanticState s;
  s.clock = j.at("clock").get<Tick>();
  for (auto it = j.at("robots").begin(); it != j.at("robots").end(); ++it) {
    RobotState r;
    r.id = it.key();
    r.pose.cell = Cell{it.value().at("cell")[0].get<int>(), it.value().at("cell")[1].get<int>()};
    r.pose.theta = it.value().at("theta").get<double>();
    r.pose.phi = it.value().at("phi").get<double>();
    if (!it.value().at("inventory").is_null())
      r.inventory = it.value().at("inventory").get<std::string>();
    for (const auto& sk : it.value().at("skills")) {
      auto k = action_kind_from_string(sk.get<std::string>());
      if (k) r.skills.insert(*k);
    }
    std::string st = it.value().at("status").get<std::string>();
    r.sigma = st == "EXECUTING" ? RobotStatus::EXECUTING
                                : (st == "CANCELING" ? RobotStatus::CANCELING : RobotStatus::IDLE);
    s.robots[r.id] = std::move(r);
  }
  for (auto it = j.at("objects").begin(); it != j.at("objects").end(); ++it) {
    ObjectRecord rec;
    rec.state.id = it.key();
    rec.state.type = it.value().at("type").get<std::string>();
    if (!it.value().at("cell").is_null()) {
      rec.state.pos = Cell{it.value().at("cell")[0].get<int>(),
                           it.value().at("cell")[1].get<int>()};
    }
    if (!it.value().at("rec").is_null()) rec.state.rec = it.value().at("rec").get<std::string>();
    rec.state.room = it.value().at("room").get<std::string>();
    for (int i = 0; i < kNumProps; ++i) {
      if (it.value().at("props").contains(kPropNames[i])) {
        rec.state.props.set(i, static_cast<std::uint8_t>(
                                   it.value().at("props").at(kPropNames[i]).get<int>()));
      }
    }
    rec.key = WriteKey{it.value().at("tau").get<Tick>(), 0,
                       it.value().at("src").get<std::string>()};
    rec.spatial_key = rec.key;
    rec.prop_keys.fill(rec.key);
    s.objects[rec.state.id] = std::move(rec);
  }
  for (auto it = j.at("areas").begin(); it != j.at("areas").end(); ++it) {
    BeliefArea ba;
    ba.area.id = it.key();
    ba.area.name = it.value().at("name").get<std::string>();
    ba.area.explored = it.value().at("explored").get<double>();
    s.areas[ba.area.id] = std::move(ba);
  }
  return s;
}

}  // namespace r2x
