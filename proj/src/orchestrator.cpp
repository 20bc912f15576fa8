#include "r2x/orchestrator.hpp"

#include <algorithm>

#include "r2x/goal.hpp"
#include "r2x/rng.hpp"

namespace r2x {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::IR: return "ir";
    case Protocol::R2R: return "r2r";
    case Protocol::R2X: return "r2x";
  }
  return "?";
}

std::optional<Protocol> protocol_from_string(const std::string& s) {
  if (s == "ir") return Protocol::IR;
  if (s == "r2r") return Protocol::R2R;
  if (s == "r2x") return Protocol::R2X;
  return std::nullopt;
}

nlohmann::ordered_json result_to_json(const EpisodeResult& r) {
  nlohmann::ordered_json j;
  j["success_truth"] = r.success_truth;
  j["success_belief"] = r.success_belief;
  j["action_steps"] = r.action_steps;
  j["path_length_m"] = r.path_length_m;
  j["planner_calls"] = r.planner_calls;
  j["token_proxy"] = r.token_proxy;
  j["ticks"] = r.ticks;
  j["fail_count"] = r.fail_count;
  j["trace_path"] = r.trace_path;
  return j;
}

namespace {

Observation robot_observation(const GridWorld& w, const RobotId& id, double half_angle,
                              int range, Tick t) {
  Observation obs;
  obs.src = id;
  obs.tau = t;
  FovResult fov = field_of_view(w, id, half_angle, range);
  obs.visited_cells = std::move(fov.cells);
  for (const Sighting& s : fov.sightings) {
    ObsEntry e;
    e.id = s.id;
    e.type = s.type;
    e.has_spatial = true;
    e.pos = s.pos;
    e.rec = s.rec;
    e.room = s.room;
    const ObjectClass* cls = find_class(s.type);
    e.observed = cls ? cls->applicable : 0;
    e.props = s.props;
    obs.entries.push_back(std::move(e));
  }
  obs.self_pose = w.robots.at(id).pose;
  return obs;
}

// Object ids the current plan is working on; a fused relocation of one of
// these is worth replanning over.
std::set<ObjectId> plan_targets(const PlanGraph& g) {
  std::set<ObjectId> out;
  for (const auto& [id, n] : g.nodes) {
    if (n.status != NodeStatus::PENDING && n.status != NodeStatus::RUNNING) continue;
    for (const char* key : {"object", "knife", "receptacle"}) {
      auto it = n.params.find(key);
      if (it != n.params.end()) out.insert(it->second);
    }
  }
  return out;
}

}  // namespace

Orchestrator::Orchestrator(Scenario sc, EpisodeConfig cfg)
    : sc_(std::move(sc)), cfg_(std::move(cfg)), world_(sc_.world), client_(cfg_.planner) {
  floorplan_ = world_;
  floorplan_.objects.clear();
  floorplan_.robots.clear();

  for (auto& [rid, r] : world_.robots) r.sigma = RobotStatus::IDLE;
  // objects declared inside a robot's hands become its inventory
  for (const auto& [oid, o] : world_.objects) {
    if (o.rec && world_.robots.count(*o.rec)) world_.robots.at(*o.rec).inventory = oid;
  }

  std::vector<AreaDef> areas;
  for (const auto& room : world_.rooms) areas.push_back({room.id, room.name, room.cells});
  std::set<SourceId> device_ids;
  for (const auto& c : sc_.cameras) device_ids.insert(c.id);
  for (const auto& r : sc_.reporters) device_ids.insert(r.id);

  auto make_hub = [&](const std::set<RobotId>& fleet) {
    Hub h;
    h.fleet = fleet;
    std::vector<RobotState> robots;
    std::set<SourceId> robot_srcs;
    for (const RobotId& id : fleet) {
      robots.push_back(world_.robots.at(id));
      robot_srcs.insert(id);
    }
    h.state = init_state(robots, areas, robot_srcs,
                         cfg_.protocol == Protocol::R2X ? device_ids : std::set<SourceId>{});
    return h;
  };

  if (cfg_.protocol == Protocol::IR) {
    for (const auto& [rid, r] : world_.robots) {
      hub_of_robot_[rid] = static_cast<int>(hubs_.size());
      hubs_.push_back(make_hub({rid}));
    }
    // Static split of the goal: robot placement goes to the hub owning the
    // robot, the rest spreads evenly over hubs in order.
    std::vector<std::size_t> load(hubs_.size(), 0);
    std::vector<GoalCondition> slices(hubs_.size());
    for (const Predicate& p : sc_.task.goal) {
      int target = 0;
      if (p.kind == PredKind::RobotInRoom && hub_of_robot_.count(p.robot)) {
        target = hub_of_robot_.at(p.robot);
      } else {
        for (int i = 1; i < static_cast<int>(hubs_.size()); ++i)
          if (load[i] < load[target]) target = i;
      }
      slices[target].push_back(p);
      ++load[target];
    }
    for (std::size_t i = 0; i < hubs_.size(); ++i) hubs_[i].goal = std::move(slices[i]);
  } else {
    std::set<RobotId> fleet;
    for (const auto& [rid, r] : world_.robots) fleet.insert(rid);
    hubs_.push_back(make_hub(fleet));
    hubs_[0].goal = sc_.task.goal;
    for (const RobotId& id : fleet) hub_of_robot_[id] = 0;
  }

  for (const auto& c : sc_.cameras)
    device_rng_.emplace(c.id, Rng(derive_seed(sc_.failure_seed, "failure/" + c.id)));
  for (const auto& r : sc_.reporters)
    device_rng_.emplace(r.id, Rng(derive_seed(sc_.failure_seed, "failure/" + r.id)));

  if (!cfg_.trace_path.empty()) {
    trace_out_.open(cfg_.trace_path);
    nlohmann::ordered_json header;
    header["format"] = "trace/1";
    header["scenario"] = scenario_to_json(sc_);
    header["config"] = {{"max_ticks", cfg_.max_ticks},
                        {"max_fails", cfg_.max_fails},
                        {"stall_horizon", cfg_.stall_horizon},
                        {"robot_range", cfg_.robot_range},
                        {"robot_half_angle", cfg_.robot_half_angle},
                        {"max_nodes", cfg_.planner.max_nodes}};
    trace_out_ << header.dump() << "\n";
  }
}

void Orchestrator::trace(nlohmann::ordered_json e) {
  if (trace_out_.is_open()) trace_out_ << e.dump() << "\n";
}

bool Orchestrator::goal_relevant(const Hub& h, const ObjectId& id,
                                 const std::string& type) const {
  for (const Predicate& p : h.goal) {
    if (eval_predicate(h.state, p)) continue;
    if (!p.object.empty() && p.object == id) return true;
    if (!p.object_class.empty() && p.object_class == type) return true;
    if (!p.receptacle.empty() && p.receptacle == id) return true;
    if (!p.receptacle_class.empty() && p.receptacle_class == type) return true;
  }
  return false;
}

void Orchestrator::apply_scripted_events() {
  for (const ScriptedEvent& ev : sc_.events) {
    if (ev.tick != t_) continue;
    auto it = world_.objects.find(ev.object);
    if (it == world_.objects.end()) continue;
    ObjectState& o = it->second;
    if (o.rec && world_.robots.count(*o.rec)) world_.robots.at(*o.rec).inventory.reset();
    o.rec = ev.rec;
    o.pos = ev.cell;
    o.room = world_.room_of(ev.cell);
    progress_this_tick_ = true;
    trace({{"t", t_}, {"e", "scripted"}, {"object", ev.object}, {"cell", {ev.cell.x, ev.cell.y}}});
  }
}

void Orchestrator::deliver_and_fuse() {
  for (std::size_t i = 0; i < hubs_.size(); ++i) {
    Hub& h = hubs_[i];
    std::vector<Observation> due = h.inbox.pop_due(t_);
    if (due.empty()) continue;

    const std::set<ObjectId> watched = plan_targets(h.plan);
    std::map<ObjectId, std::optional<Cell>> before;
    for (const ObjectId& id : watched) {
      const ObjectState* o = h.state.object(id);
      before[id] = o ? o->pos : std::nullopt;
    }

    std::vector<ObjectId> discovered;
    for (const Observation& obs : due) {
      FuseResult fr = fuse(h.state, obs);
      // routine pose refreshes land every tick, so only discoveries count
      // toward the stall horizon
      if (!fr.discovered.empty()) progress_this_tick_ = true;
      discovered.insert(discovered.end(), fr.discovered.begin(), fr.discovered.end());
      trace({{"t", t_},
             {"e", "obs"},
             {"hub", static_cast<int>(i)},
             {"src", obs.src},
             {"tau", obs.tau},
             {"applied", fr.applied},
             {"stale", fr.stale}});
    }

    for (const ObjectId& id : watched) {
      const ObjectState* o = h.state.object(id);
      std::optional<Cell> now = o ? o->pos : std::nullopt;
      if (before[id] && now && chebyshev(*before[id], *now) >= 2) {
        h.needs_replan = true;
        trace({{"t", t_}, {"e", "relocated"}, {"hub", static_cast<int>(i)}, {"object", id}});
      }
    }
    for (const ObjectId& id : discovered) {
      const ObjectState* o = h.state.object(id);
      if (h.have_plan && o && goal_relevant(h, id, o->type)) {
        h.needs_replan = true;
        trace({{"t", t_}, {"e", "discovered"}, {"hub", static_cast<int>(i)}, {"object", id}});
      }
    }
  }
}

void Orchestrator::release_robot(Hub& h, const RobotId& id, std::optional<double> new_phi) {
  world_.robots.at(id).sigma = RobotStatus::IDLE;
  if (new_phi) world_.robots.at(id).pose.phi = *new_phi;
  auto it = h.state.robots.find(id);
  if (it != h.state.robots.end()) {
    it->second.sigma = RobotStatus::IDLE;
    if (new_phi) it->second.pose.phi = *new_phi;
  }
  assignment_.erase(id);
}

void Orchestrator::halt_hub(Hub& h) {
  for (auto& [node_id, ex] : h.running) {
    const RobotId& rid = ex.robot();
    world_.robots.at(rid).sigma = RobotStatus::CANCELING;
    auto it = h.state.robots.find(rid);
    if (it != h.state.robots.end()) it->second.sigma = RobotStatus::CANCELING;
    assignment_.erase(rid);
    // the old plan stays installed until a replacement validates, so halted
    // nodes must be runnable again in case the replan attempt fails
    auto nit = h.plan.nodes.find(node_id);
    if (nit != h.plan.nodes.end() && nit->second.status == NodeStatus::RUNNING) {
      nit->second.status = NodeStatus::PENDING;
      nit->second.assigned.clear();
    }
  }
  h.running.clear();
}

void Orchestrator::plan_phase() {
  for (std::size_t i = 0; i < hubs_.size(); ++i) {
    Hub& h = hubs_[i];
    if (h.fails >= cfg_.max_fails) continue;
    if (query_goal(h.state, h.goal)) continue;
    const bool want = !h.have_plan || h.needs_replan || h.plan.all_terminal();
    if (!want) continue;

    halt_hub(h);
    PlanOutcome po = client_.request_plan(h.state, h.goal, floorplan_, sc_.task.description);
    ++h.planner_calls;
    h.tokens += po.prompt_tokens + po.completion_tokens;

    if (!po.ok) {
      ++h.fails;
      trace({{"t", t_},
             {"e", "plan"},
             {"hub", static_cast<int>(i)},
             {"ok", false},
             {"error", po.error}});
      continue;
    }
    if (po.plan.empty()) {
      // an empty plan against an unsatisfied goal cannot make progress
      ++h.fails;
      trace({{"t", t_},
             {"e", "plan"},
             {"hub", static_cast<int>(i)},
             {"ok", false},
             {"error", "empty_plan"}});
      continue;
    }
    PlanValidation v = validate_plan(po.plan, h.state);
    if (!v.ok) {
      ++h.fails;
      trace({{"t", t_},
             {"e", "plan"},
             {"hub", static_cast<int>(i)},
             {"ok", false},
             {"error", v.error}});
      continue;
    }
    h.plan = std::move(po.plan);
    h.have_plan = true;
    h.needs_replan = false;
    progress_this_tick_ = true;
    trace({{"t", t_},
           {"e", "plan"},
           {"hub", static_cast<int>(i)},
           {"ok", true},
           {"nodes", h.plan.nodes.size()}});
  }
}

void Orchestrator::dispatch_phase() {
  for (std::size_t i = 0; i < hubs_.size(); ++i) {
    Hub& h = hubs_[i];
    if (!h.have_plan) continue;
    for (const std::string& node_id : h.plan.ready_nodes()) {
      ActionNode& node = h.plan.nodes.at(node_id);
      std::optional<RobotId> rid = match_robot(node, h.state, floorplan_);
      if (!rid) continue;
      node.status = NodeStatus::RUNNING;
      node.assigned = *rid;
      h.running.emplace(node_id, NodeExecutor(node, *rid));
      world_.robots.at(*rid).sigma = RobotStatus::EXECUTING;
      h.state.robots.at(*rid).sigma = RobotStatus::EXECUTING;
      assignment_[*rid] = {static_cast<int>(i), node_id};
      trace({{"t", t_},
             {"e", "dispatch"},
             {"hub", static_cast<int>(i)},
             {"node", node_id},
             {"robot", *rid}});
    }
  }
}

void Orchestrator::act_phase() {
  for (auto& [rid, r] : world_.robots) {
    if (r.sigma != RobotStatus::EXECUTING) continue;
    auto as = assignment_.find(rid);
    if (as == assignment_.end()) continue;
    Hub& h = hubs_[as->second.first];
    auto ex = h.running.find(as->second.second);
    if (ex == h.running.end()) continue;
    ExecReport rep = ex->second.tick(world_, h.state, t_);
    if (!rep.acted) continue;
    ++action_steps_;
    if (rep.ok) progress_this_tick_ = true;
    if (rep.moved) path_length_m_ += world_.cell_size;
    nlohmann::ordered_json e{{"t", t_},
                             {"e", "act"},
                             {"robot", rid},
                             {"kind", to_string(rep.step.kind)},
                             {"ok", rep.ok}};
    if (rep.step.kind == ActionKind::MoveStep || rep.step.kind == ActionKind::Rotate)
      e["cell"] = {rep.step.cell.x, rep.step.cell.y};
    if (!rep.step.target.empty()) e["target"] = rep.step.target;
    if (!rep.ok) e["fail"] = rep.failure;
    trace(std::move(e));
  }
}

void Orchestrator::monitor_phase() {
  for (std::size_t i = 0; i < hubs_.size(); ++i) {
    Hub& h = hubs_[i];
    std::vector<std::string> settled;
    for (const auto& [node_id, ex] : h.running) {
      if (ex.state() != ExecState::RUNNING) settled.push_back(node_id);
    }
    for (const std::string& node_id : settled) {
      NodeExecutor& ex = h.running.at(node_id);
      ActionNode& node = h.plan.nodes.at(node_id);
      if (ex.state() == ExecState::DONE) {
        node.status = NodeStatus::DONE;
        progress_this_tick_ = true;
        release_robot(h, ex.robot(), phi_requirement(node.kind));
        trace({{"t", t_},
               {"e", "node"},
               {"hub", static_cast<int>(i)},
               {"node", node_id},
               {"status", "done"}});
      } else {
        node.status = NodeStatus::FAILED;
        ++h.fails;
        h.needs_replan = true;
        release_robot(h, ex.robot(), std::nullopt);
        trace({{"t", t_},
               {"e", "node"},
               {"hub", static_cast<int>(i)},
               {"node", node_id},
               {"status", "failed"},
               {"reason", ex.failure_reason()}});
      }
      h.running.erase(node_id);
    }
  }
}

void Orchestrator::sense_phase() {
  for (const auto& [rid, r] : world_.robots) {
    Observation obs =
        robot_observation(world_, rid, cfg_.robot_half_angle, cfg_.robot_range, t_);
    hubs_[hub_of_robot_.at(rid)].inbox.push(std::move(obs), t_ + 1);
  }
  if (cfg_.protocol != Protocol::R2X) return;
  const Tick arrival = t_ + 1 + sc_.failure.t_delay;
  for (const CameraSpec& cam : sc_.cameras) {
    if (cam.period <= 0 || t_ % cam.period != 0) continue;
    Observation obs = degrade(emit_camera(world_, cam, t_), sc_.failure, device_rng_.at(cam.id));
    for (Hub& h : hubs_) {
      if (h.state.device_sources.count(cam.id)) h.inbox.push(obs, arrival);
    }
  }
  for (const ReporterSpec& rep : sc_.reporters) {
    if (rep.period <= 0 || t_ % rep.period != 0) continue;
    Observation obs =
        degrade(emit_reporter(world_, rep, t_), sc_.failure, device_rng_.at(rep.id));
    for (Hub& h : hubs_) {
      if (h.state.device_sources.count(rep.id)) h.inbox.push(obs, arrival);
    }
  }
}

void Orchestrator::finish_if_terminal() {
  bool all_believe = true;
  for (const Hub& h : hubs_) {
    if (!query_goal(h.state, h.goal)) {
      all_believe = false;
      break;
    }
  }
  if (all_believe) {
    success_belief_ = true;
    finished_ = true;
  } else if (std::any_of(hubs_.begin(), hubs_.end(),
                         [&](const Hub& h) { return h.fails >= cfg_.max_fails; })) {
    finished_ = true;
  } else if (t_ >= cfg_.max_ticks) {
    finished_ = true;
  } else if (t_ - last_progress_ > cfg_.stall_horizon) {
    finished_ = true;
  }
  if (finished_ && trace_out_.is_open()) {
    nlohmann::ordered_json end{{"t", t_}, {"e", "end"}};
    nlohmann::ordered_json res = result_to_json(result());
    res.erase("trace_path");  // keep traces comparable across output paths
    end["result"] = std::move(res);
    trace_out_ << end.dump() << "\n";
    trace_out_.flush();
  }
}

bool Orchestrator::step() {
  if (finished_) return false;
  progress_this_tick_ = false;
  apply_scripted_events();
  deliver_and_fuse();
  plan_phase();
  dispatch_phase();
  act_phase();
  monitor_phase();
  sense_phase();
  for (auto& [rid, r] : world_.robots) {
    if (r.sigma != RobotStatus::CANCELING) continue;
    r.sigma = RobotStatus::IDLE;
    for (Hub& h : hubs_) {
      auto it = h.state.robots.find(rid);
      if (it != h.state.robots.end() && it->second.sigma == RobotStatus::CANCELING)
        it->second.sigma = RobotStatus::IDLE;
    }
  }
  ++t_;
  if (progress_this_tick_) last_progress_ = t_;
  finish_if_terminal();
  return !finished_;
}

EpisodeResult Orchestrator::run() {
  while (step()) {
  }
  return result();
}

EpisodeResult Orchestrator::result() const {
  EpisodeResult r;
  r.success_truth = goal_satisfied_truth(world_, sc_.task.goal);
  r.success_belief = success_belief_;
  r.action_steps = action_steps_;
  r.path_length_m = path_length_m_;
  for (const Hub& h : hubs_) {
    r.planner_calls += h.planner_calls;
    r.token_proxy += h.tokens;
    r.fail_count += h.fails;
  }
  r.ticks = t_;
  r.trace_path = cfg_.trace_path;
  return r;
}

}  // namespace r2x
