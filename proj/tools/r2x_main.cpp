#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "r2x/bench.hpp"
#include "r2x/errors.hpp"
#include "r2x/orchestrator.hpp"
#include "r2x/scenario.hpp"
#include "r2x/scene_gen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// "baseline" keeps the in-process planner; "external:<endpoint>" goes over
// the wire. R2X_PLANNER_ENDPOINT / R2X_PLANNER_API_KEY still win afterwards.
r2x::PlannerConfig apply_planner_selector(r2x::PlannerConfig pc, const std::string& sel) {
  if (sel == "baseline")
    pc.endpoint.clear();
  else
    pc.endpoint = sel.substr(std::string("external:").size());
  return r2x::planner_config_from_env(std::move(pc));
}

std::string planner_selector_error(const std::string& sel) {
  if (sel == "baseline" || (sel.rfind("external:", 0) == 0 && sel.size() > 9)) return {};
  return "expected 'baseline' or 'external:<endpoint>', got '" + sel + "'";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_gen(const r2x::SceneParams& params, std::uint64_t seed, const std::string& out) {
  r2x::Scenario sc = r2x::generate_scene(params, seed);
  r2x::save_scenario(sc, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

struct RunFlags {
  std::string scene;
  std::string protocol{"r2x"};
  std::string planner{"baseline"};
  std::string trace;
  std::string out;
  std::optional<int> t_delay;
  std::optional<double> p_omit;
  std::optional<double> p_corrupt;
  r2x::EpisodeConfig episode;
};

int cmd_run(const RunFlags& f) {
  r2x::Scenario sc = r2x::load_scenario(f.scene);
  if (f.t_delay) sc.failure.t_delay = *f.t_delay;
  if (f.p_omit) sc.failure.p_omit = *f.p_omit;
  if (f.p_corrupt) sc.failure.p_corrupt = *f.p_corrupt;

  r2x::EpisodeConfig cfg = f.episode;
  cfg.protocol = *r2x::protocol_from_string(f.protocol);
  cfg.planner = apply_planner_selector(cfg.planner, f.planner);
  cfg.trace_path = f.trace;

  r2x::Orchestrator o(std::move(sc), cfg);
  r2x::EpisodeResult res = o.run();
  std::string text = r2x::result_to_json(res).dump(2) + "\n";
  if (f.out.empty())
    std::cout << text;
  else
    write_text(f.out, text);
  return res.success_truth ? 0 : 1;
}

int cmd_bench(const std::string& matrix_path, int seeds, std::uint64_t first_seed, int jobs,
              const std::string& planner_sel, const std::string& out_dir) {
  std::ifstream in(matrix_path);
  if (!in) throw std::runtime_error("cannot read " + matrix_path);
  r2x::BenchMatrix m = r2x::bench_matrix_from_json(json::parse(in));
  m.episode.planner = apply_planner_selector(m.episode.planner, planner_sel);

  r2x::SuiteResult r = r2x::run_suite(m, seeds, jobs, first_seed);

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "episodes.csv", r2x::suite_csv(r));
  write_text(fs::path(out_dir) / "aggregates.json", r2x::suite_aggregates(r).dump(2) + "\n");

  ordered_json trends;
  trends["format"] = "trends/1";
  trends["trends"] = ordered_json::array();
  try {
    for (const r2x::TrendResult& t : r2x::trend_report(r)) {
      trends["trends"].push_back({{"name", t.name},
                                  {"pass", t.pass},
                                  {"p_value", t.p_value},
                                  {"effect", t.effect},
                                  {"pairs", t.pairs},
                                  {"detail", t.detail}});
      std::cout << (t.pass ? "pass " : "fail ") << t.name << "  " << t.detail << "\n";
    }
  } catch (const r2x::InsufficientData& e) {
    trends["note"] = e.what();
    std::cout << "trends skipped: " << e.what() << "\n";
  }
  write_text(fs::path(out_dir) / "trends.json", trends.dump(2) + "\n");

  int errors = 0;
  for (const r2x::EpisodeRow& row : r.rows)
    if (row.status != "ok") ++errors;
  std::cout << "episodes " << r.rows.size() << ", errors " << errors << ", wrote " << out_dir
            << "\n";
  return 0;
}

struct Canvas {
  int w{0}, h{0};
  std::vector<std::string> lines;

  Canvas(int width, int height, const std::set<std::pair<int, int>>& east,
         const std::set<std::pair<int, int>>& north)
      : w(width), h(height) {
    lines.assign(2 * h + 1, std::string(2 * w + 1, ' '));
    for (int y = 0; y <= h; ++y)
      for (int x = 0; x <= w; ++x) lines[2 * y][2 * x] = '+';
    for (int x = 0; x < w; ++x) {
      lines[0][2 * x + 1] = '-';
      lines[2 * h][2 * x + 1] = '-';
    }
    for (int y = 0; y < h; ++y) {
      lines[2 * y + 1][0] = '|';
      lines[2 * y + 1][2 * w] = '|';
    }
    for (auto [x, y] : east) lines[2 * y + 1][2 * (x + 1)] = '|';
    for (auto [x, y] : north) lines[2 * (y + 1)][2 * x + 1] = '-';
  }

  void put(int x, int y, char c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    lines[2 * y + 1][2 * x + 1] = c;
  }

  // grid y grows north, so print top down
  void print(std::ostream& os) const {
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) os << *it << "\n";
  }
};

int cmd_replay(const std::string& trace_path, bool ascii) {
  std::ifstream in(trace_path);
  if (!in) throw std::runtime_error("cannot read " + trace_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace " + trace_path);
  json header = json::parse(line);
  if (header.value("format", "") != "trace/1")
    throw std::runtime_error(trace_path + " is not a trace file");
  const json& sc = header.at("scenario");

  const int w = sc.at("grid").at("width").get<int>();
  const int h = sc.at("grid").at("height").get<int>();
  std::set<std::pair<int, int>> east, north;
  for (const auto& wall : sc.at("grid").at("walls")) {
    if (wall.at(2) == "E")
      east.insert({wall.at(0).get<int>(), wall.at(1).get<int>()});
    else
      north.insert({wall.at(0).get<int>(), wall.at(1).get<int>()});
  }

  std::map<std::string, std::pair<int, int>> objects;
  std::set<std::string> hidden;  // picked up, rides along with a robot
  for (const auto& o : sc.at("objects")) {
    objects[o.at("id")] = {o.at("cell").at(0).get<int>(), o.at("cell").at(1).get<int>()};
    if (!o.at("rec").is_null() && objects.count(o.at("rec").get<std::string>()))
      hidden.insert(o.at("id"));  // stacked items draw as their receptacle
  }
  std::map<std::string, std::pair<int, int>> robots;
  std::vector<std::string> robot_order;
  for (const auto& r : sc.at("robots")) {
    robots[r.at("id")] = {r.at("cell").at(0).get<int>(), r.at("cell").at(1).get<int>()};
    robot_order.push_back(r.at("id"));
  }
  std::map<std::string, std::string> held;

  // group events by tick; obs entries stay out of the log, they fire every
  // tick and drown everything else
  std::map<long, std::vector<json>> ticks;
  long last_t = 0;
  while (std::getline(in, line)) {
    json e = json::parse(line);
    long t = e.value("t", 0L);
    last_t = std::max(last_t, t);
    ticks[t].push_back(std::move(e));
  }

  for (long t = 0; t <= last_t; ++t) {
    std::vector<std::string> log;
    auto it = ticks.find(t);
    if (it != ticks.end()) {
      for (const json& e : it->second) {
        const std::string kind = e.value("e", "");
        if (kind == "obs") continue;
        if (kind == "act") {
          const std::string robot = e.at("robot");
          const std::string step = e.at("kind");
          const bool ok = e.at("ok").get<bool>();
          if (ok && step == "MoveStep")
            robots[robot] = {e.at("cell").at(0).get<int>(), e.at("cell").at(1).get<int>()};
          if (ok && step == "Pickup") {
            held[robot] = e.at("target");
            hidden.insert(e.at("target").get<std::string>());
          }
          if (ok && step == "Put" && held.count(robot)) {
            const std::string target = e.at("target");
            if (objects.count(target)) {
              objects[held[robot]] = objects[target];
              hidden.erase(held[robot]);
            }
            held.erase(robot);
          }
          std::string msg = robot + " " + step;
          if (e.contains("target")) msg += " " + e.at("target").get<std::string>();
          if (!ok) msg += " FAILED " + e.value("fail", "");
          log.push_back(std::move(msg));
        } else if (kind == "scripted") {
          const std::string obj = e.at("object");
          objects[obj] = {e.at("cell").at(0).get<int>(), e.at("cell").at(1).get<int>()};
          hidden.erase(obj);
          log.push_back("scripted move of " + obj);
        } else if (kind == "plan") {
          std::string msg = "hub " + std::to_string(e.value("hub", 0)) + " plan ";
          if (e.value("ok", false))
            msg += "ok, " + std::to_string(e.value("nodes", 0)) + " nodes";
          else
            msg += "failed: " + e.value("error", "");
          log.push_back(std::move(msg));
        } else if (kind == "dispatch") {
          log.push_back(e.at("node").get<std::string>() + " -> " +
                        e.at("robot").get<std::string>());
        } else if (kind == "node") {
          log.push_back(e.at("node").get<std::string>() + " " + e.value("status", "") +
                        (e.contains("reason") ? " " + e.at("reason").get<std::string>() : ""));
        } else if (kind == "relocated" || kind == "discovered") {
          log.push_back(kind + ": " + e.at("object").get<std::string>());
        } else if (kind == "end") {
          log.push_back("end: " + e.at("result").dump());
        }
      }
    }

    if (ascii) {
      Canvas canvas(w, h, east, north);
      for (const auto& [id, cell] : objects)
        if (!hidden.count(id)) canvas.put(cell.first, cell.second, std::tolower(id[0]));
      for (std::size_t i = 0; i < robot_order.size(); ++i) {
        auto cell = robots.at(robot_order[i]);
        canvas.put(cell.first, cell.second, static_cast<char>('1' + i));
      }
      std::cout << "--- t=" << t << " ---\n";
      canvas.print(std::cout);
      for (const std::string& msg : log) std::cout << "  " << msg << "\n";
    } else {
      for (const std::string& msg : log) std::cout << "t=" << t << "  " << msg << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"indoor multi-robot task simulator"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a scenario file");
  r2x::SceneParams params;
  std::uint64_t seed = 1;
  std::string gen_out;
  gen->add_option("--seed", seed, "scene seed");
  gen->add_option("--rooms", params.rooms, "room count")->check(CLI::Range(2, 8));
  gen->add_option("--width", params.width, "grid width")->check(CLI::Range(8, 64));
  gen->add_option("--height", params.height, "grid height")->check(CLI::Range(8, 64));
  gen->add_option("--team", params.team_size, "robot count")->check(CLI::Range(1, 6));
  gen->add_option("--coverage", params.coverage, "camera coverage target")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--density", params.object_density, "loose items per cell")
      ->check(CLI::Range(0.0, 0.5));
  gen->add_option("--camera-budget", params.camera_budget, "max cameras");
  gen->add_option("--template", params.task_template, "task family")
      ->check(CLI::IsMember({"consolidate", "dispose", "power_down", "fetch"}));
  gen->add_option("--relocation-tick", params.relocation_tick,
                  "schedule a mid-episode target move");
  gen->add_option("-o,--out", gen_out, "output scenario path")->required();

  // run
  auto* run = app.add_subcommand("run", "run one episode on a scenario file");
  RunFlags rf;
  run->add_option("scene", rf.scene, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--protocol", rf.protocol, "coordination protocol")
      ->check(CLI::IsMember({"ir", "r2r", "r2x"}));
  auto* td = run->add_option("--t-delay", rf.t_delay, "device report delay in ticks")
                 ->check(CLI::NonNegativeNumber);
  auto* po = run->add_option("--p-omit", rf.p_omit, "device omission probability")
                 ->check(CLI::Range(0.0, 1.0));
  auto* pc = run->add_option("--p-corrupt", rf.p_corrupt, "device bit corruption probability")
                 ->check(CLI::Range(0.0, 1.0));
  run->add_option("--planner", rf.planner, "baseline or external:<endpoint>");
  run->add_option("--max-ticks", rf.episode.max_ticks, "tick budget");
  run->add_option("--max-fails", rf.episode.max_fails, "per hub failure budget");
  run->add_option("--stall-horizon", rf.episode.stall_horizon, "ticks without progress");
  run->add_option("--max-nodes", rf.episode.planner.max_nodes, "plan size cap");
  run->add_option("--retries", rf.episode.planner.retries, "planner transport retries");
  run->add_option("--trace", rf.trace, "write a JSONL trace here");
  run->add_option("-o,--out", rf.out, "result path, stdout when omitted");

  // bench
  auto* bench = app.add_subcommand("bench", "run an ablation matrix");
  std::string matrix_path, bench_out, bench_planner = "baseline";
  int seeds = 30, jobs = 1;
  std::uint64_t first_seed = 1;
  bench->add_option("--matrix", matrix_path, "matrix json")->required()->check(CLI::ExistingFile);
  bench->add_option("--seeds", seeds, "seeds per cell")->check(CLI::PositiveNumber);
  bench->add_option("--first-seed", first_seed, "first seed value");
  bench->add_option("--jobs", jobs, "parallel episodes")->check(CLI::PositiveNumber);
  bench->add_option("--planner", bench_planner, "baseline or external:<endpoint>");
  bench->add_option("-o,--out", bench_out, "output directory")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "print a trace, optionally as frames");
  std::string trace_path;
  bool ascii = false;
  replay->add_option("trace", trace_path, "trace JSONL")->required()->check(CLI::ExistingFile);
  replay->add_flag("--ascii", ascii, "render per-tick top-down frames");

  try {
    app.parse(argc, argv);
    for (const std::string& sel : {rf.planner, bench_planner}) {
      std::string err = planner_selector_error(sel);
      if (!err.empty()) throw CLI::ValidationError("--planner", err);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(params, seed, gen_out);
    if (run->parsed()) {
      if (!*td) rf.t_delay.reset();
      if (!*po) rf.p_omit.reset();
      if (!*pc) rf.p_corrupt.reset();
      return cmd_run(rf);
    }
    if (bench->parsed()) {
      return cmd_bench(matrix_path, seeds, first_seed, jobs, bench_planner, bench_out);
    }
    return cmd_replay(trace_path, ascii);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
