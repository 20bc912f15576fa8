#include "r2x/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "r2x/errors.hpp"

namespace r2x {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void expect_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known)
      throw SchemaError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

BenchMatrix bench_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("matrix must be an object");
  expect_keys(j, {"protocols", "t_delay", "p_omit", "p_corrupt", "team_sizes", "scene", "episode"},
              "matrix");
  BenchMatrix m;
  try {
    if (j.contains("protocols")) {
      m.protocols = j.at("protocols").get<std::vector<std::string>>();
      for (const std::string& p : m.protocols)
        if (!protocol_from_string(p)) throw SchemaError("unknown protocol '" + p + "'");
    }
    if (j.contains("t_delay")) m.t_delays = j.at("t_delay").get<std::vector<int>>();
    if (j.contains("p_omit")) m.p_omits = j.at("p_omit").get<std::vector<double>>();
    if (j.contains("p_corrupt")) m.p_corrupts = j.at("p_corrupt").get<std::vector<double>>();
    if (j.contains("team_sizes")) m.team_sizes = j.at("team_sizes").get<std::vector<int>>();
    if (j.contains("scene")) {
      const json& s = j.at("scene");
      expect_keys(s,
                  {"rooms", "width", "height", "object_density", "coverage", "camera_budget",
                   "task_template", "relocation_tick"},
                  "scene");
      m.scene.rooms = s.value("rooms", m.scene.rooms);
      m.scene.width = s.value("width", m.scene.width);
      m.scene.height = s.value("height", m.scene.height);
      m.scene.object_density = s.value("object_density", m.scene.object_density);
      m.scene.coverage = s.value("coverage", m.scene.coverage);
      m.scene.camera_budget = s.value("camera_budget", m.scene.camera_budget);
      m.scene.task_template = s.value("task_template", m.scene.task_template);
      m.scene.relocation_tick = s.value("relocation_tick", m.scene.relocation_tick);
    }
    if (j.contains("episode")) {
      const json& e = j.at("episode");
      expect_keys(e, {"max_ticks", "max_fails", "stall_horizon", "robot_range",
                      "robot_half_angle", "max_nodes", "retries"},
                  "episode");
      m.episode.max_ticks = e.value("max_ticks", m.episode.max_ticks);
      m.episode.max_fails = e.value("max_fails", m.episode.max_fails);
      m.episode.stall_horizon = e.value("stall_horizon", m.episode.stall_horizon);
      m.episode.robot_range = e.value("robot_range", m.episode.robot_range);
      m.episode.robot_half_angle = e.value("robot_half_angle", m.episode.robot_half_angle);
      m.episode.planner.max_nodes = e.value("max_nodes", m.episode.planner.max_nodes);
      m.episode.planner.retries = e.value("retries", m.episode.planner.retries);
    }
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
  if (m.protocols.empty() || m.t_delays.empty() || m.p_omits.empty() || m.p_corrupts.empty() ||
      m.team_sizes.empty())
    throw SchemaError("every axis needs at least one value");
  for (int d : m.t_delays)
    if (d < 0) throw SchemaError("t_delay must be >= 0");
  for (double p : m.p_omits)
    if (p < 0.0 || p > 1.0) throw SchemaError("p_omit must be in [0,1]");
  for (double p : m.p_corrupts)
    if (p < 0.0 || p > 1.0) throw SchemaError("p_corrupt must be in [0,1]");
  return m;
}

namespace {

EpisodeRow run_one(const BenchMatrix& m, const CellKey& c, std::uint64_t seed) {
  EpisodeRow row;
  row.cell = c;
  row.seed = seed;
  try {
    SceneParams sp = m.scene;
    sp.team_size = c.team_size;
    Scenario sc = generate_scene(sp, seed);
    sc.failure.t_delay = c.t_delay;
    sc.failure.p_omit = c.p_omit;
    sc.failure.p_corrupt = c.p_corrupt;
    EpisodeConfig cfg = m.episode;
    cfg.protocol = *protocol_from_string(c.protocol);
    cfg.trace_path.clear();
    Orchestrator o(std::move(sc), cfg);
    row.result = o.run();
    row.result.trace_path.clear();
  } catch (const std::exception& e) {
    row.status = std::string("error:") + e.what();
    row.result = EpisodeResult{};
  }
  return row;
}

}  // namespace

SuiteResult run_suite(const BenchMatrix& m, int n_seeds, int jobs, std::uint64_t first_seed) {
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  std::vector<CellKey> cells;
  for (const std::string& proto : m.protocols)
    for (int td : m.t_delays)
      for (double po : m.p_omits)
        for (double pc : m.p_corrupts)
          for (int ts : m.team_sizes) cells.push_back({proto, td, po, pc, ts});

  SuiteResult out;
  out.matrix = m;
  out.n_seeds = n_seeds;
  out.first_seed = first_seed;
  out.rows.resize(cells.size() * static_cast<std::size_t>(n_seeds));

  // work items land in preassigned slots, so the merge order never depends
  // on scheduling
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= out.rows.size()) return;
      const CellKey& c = cells[i / static_cast<std::size_t>(n_seeds)];
      std::uint64_t seed = first_seed + i % static_cast<std::size_t>(n_seeds);
      out.rows[i] = run_one(m, c, seed);
    }
  };

  int threads = std::clamp<int>(jobs, 1, static_cast<int>(out.rows.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return out;
}

std::string suite_csv(const SuiteResult& r) {
  std::string s =
      "protocol,t_delay,p_omit,p_corrupt,team_size,seed,status,success_truth,"
      "success_belief,action_steps,path_length_m,planner_calls,token_proxy,ticks,fail_count\n";
  for (const EpisodeRow& row : r.rows) {
    std::string status = row.status;
    for (char& ch : status)
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    s += row.cell.protocol;
    s += ',' + std::to_string(row.cell.t_delay);
    s += ',' + json(row.cell.p_omit).dump();
    s += ',' + json(row.cell.p_corrupt).dump();
    s += ',' + std::to_string(row.cell.team_size);
    s += ',' + std::to_string(row.seed);
    s += ',' + status;
    s += row.result.success_truth ? ",1" : ",0";
    s += row.result.success_belief ? ",1" : ",0";
    s += ',' + std::to_string(row.result.action_steps);
    s += ',' + json(row.result.path_length_m).dump();
    s += ',' + std::to_string(row.result.planner_calls);
    s += ',' + std::to_string(row.result.token_proxy);
    s += ',' + std::to_string(row.result.ticks);
    s += ',' + std::to_string(row.result.fail_count);
    s += '\n';
  }
  return s;
}

namespace {

struct CellStats {
  int episodes{0};
  int errors{0};
  int successes{0};
  double steps{0.0};
  double path{0.0};
  double tokens{0.0};
  int clean{0};
};

}  // namespace

nlohmann::ordered_json suite_aggregates(const SuiteResult& r) {
  std::vector<CellKey> order;
  std::map<CellKey, CellStats> stats;
  for (const EpisodeRow& row : r.rows) {
    auto [it, fresh] = stats.try_emplace(row.cell);
    if (fresh) order.push_back(row.cell);
    CellStats& s = it->second;
    ++s.episodes;
    if (row.status != "ok") {
      ++s.errors;
      continue;
    }
    ++s.clean;
    if (row.result.success_truth) ++s.successes;
    s.steps += static_cast<double>(row.result.action_steps);
    s.path += row.result.path_length_m;
    s.tokens += static_cast<double>(row.result.token_proxy);
  }

  ordered_json cells = ordered_json::array();
  for (const CellKey& c : order) {
    const CellStats& s = stats.at(c);
    ordered_json jc;
    jc["protocol"] = c.protocol;
    jc["t_delay"] = c.t_delay;
    jc["p_omit"] = c.p_omit;
    jc["p_corrupt"] = c.p_corrupt;
    jc["team_size"] = c.team_size;
    jc["episodes"] = s.episodes;
    jc["errors"] = s.errors;
    jc["success_rate"] = s.episodes ? static_cast<double>(s.successes) / s.episodes : 0.0;
    jc["avg_action_steps"] = s.clean ? s.steps / s.clean : 0.0;
    jc["avg_path_length_m"] = s.clean ? s.path / s.clean : 0.0;
    jc["avg_token_proxy"] = s.clean ? s.tokens / s.clean : 0.0;
    cells.push_back(std::move(jc));
  }

  ordered_json out;
  out["format"] = "bench/1";
  out["n_seeds"] = r.n_seeds;
  out["first_seed"] = r.first_seed;
  out["cells"] = std::move(cells);
  return out;
}

double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n <= 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  n * std::log(2.0));
  return std::min(p, 1.0);
}

namespace {

using Metric = double (*)(const EpisodeResult&);

double metric_path(const EpisodeResult& r) { return r.path_length_m; }
double metric_tokens(const EpisodeResult& r) { return static_cast<double>(r.token_proxy); }
double metric_success(const EpisodeResult& r) { return r.success_truth ? 1.0 : 0.0; }

struct CellRows {
  std::map<std::uint64_t, const EpisodeResult*> ok;
  int episodes{0};
  int successes{0};
  bool present() const { return !ok.empty(); }
  double rate() const {
    return episodes ? static_cast<double>(successes) / episodes : 0.0;
  }
  double mean(Metric m) const {
    double sum = 0.0;
    for (const auto& [seed, res] : ok) sum += m(*res);
    return ok.empty() ? 0.0 : sum / static_cast<double>(ok.size());
  }
};

CellRows collect(const SuiteResult& r, const CellKey& c) {
  CellRows out;
  for (const EpisodeRow& row : r.rows) {
    if (row.cell != c) continue;
    ++out.episodes;
    if (row.status != "ok") continue;
    out.ok.emplace(row.seed, &row.result);
    if (row.result.success_truth) ++out.successes;
  }
  return out;
}

// hypothesis: metric is smaller in `better` than in `worse`
TrendResult paired_less(const std::string& name, const CellRows& better, const CellRows& worse,
                        Metric m) {
  TrendResult t;
  t.name = name;
  int wins = 0, losses = 0;
  double delta = 0.0;
  for (const auto& [seed, res] : better.ok) {
    auto it = worse.ok.find(seed);
    if (it == worse.ok.end()) continue;
    ++t.pairs;
    const double b = m(*res), w = m(*it->second);
    delta += w - b;
    if (b < w) ++wins;
    if (b > w) ++losses;
  }
  t.p_value = sign_test_p(wins, losses);
  t.effect = t.pairs ? delta / t.pairs : 0.0;
  t.pass = t.p_value < 0.05;
  t.detail = "mean " + fmt(worse.mean(m)) + " -> " + fmt(better.mean(m)) + " over " +
             std::to_string(t.pairs) + " pairs";
  return t;
}

// hypothesis: the cell means move in `dir` (+1 rising, -1 falling) along the
// axis, with a real difference between the endpoints
TrendResult monotone(const std::string& name, const std::vector<CellRows>& cells, Metric m,
                     int dir) {
  TrendResult t;
  t.name = name;
  std::vector<double> means;
  means.reserve(cells.size());
  for (const CellRows& c : cells) means.push_back(c.mean(m));
  bool ordered = true;
  for (std::size_t i = 1; i < means.size(); ++i)
    if (dir > 0 ? means[i] < means[i - 1] : means[i] > means[i - 1]) ordered = false;

  int wins = 0, losses = 0;
  const CellRows& lo = cells.front();
  const CellRows& hi = cells.back();
  for (const auto& [seed, res] : lo.ok) {
    auto it = hi.ok.find(seed);
    if (it == hi.ok.end()) continue;
    ++t.pairs;
    const double a = m(*res), b = m(*it->second);
    if (dir > 0 ? b > a : b < a) ++wins;
    if (dir > 0 ? b < a : b > a) ++losses;
  }
  t.p_value = sign_test_p(wins, losses);
  t.effect = means.back() - means.front();
  t.pass = ordered && t.p_value < 0.05;
  t.detail = "means";
  for (double v : means) t.detail += " " + fmt(v);
  return t;
}

TrendResult parity(const std::string& name, const CellRows& a, const CellRows& b, double tol) {
  TrendResult t;
  t.name = name;
  t.effect = a.rate() - b.rate();
  t.pairs = static_cast<int>(std::min(a.ok.size(), b.ok.size()));
  t.pass = std::abs(t.effect) <= tol;
  t.detail = "rates " + fmt(a.rate()) + " vs " + fmt(b.rate());
  return t;
}

}  // namespace

std::vector<TrendResult> trend_report(const SuiteResult& r) {
  const BenchMatrix& m = r.matrix;
  std::vector<TrendResult> out;
  if (m.protocols.empty() || m.t_delays.empty() || m.p_omits.empty() || m.p_corrupts.empty() ||
      m.team_sizes.empty() || r.rows.empty())
    throw InsufficientData("suite is empty");

  auto has_proto = [&](const std::string& p) {
    return std::find(m.protocols.begin(), m.protocols.end(), p) != m.protocols.end();
  };
  // the failure axes only bite when device feeds are in the loop
  const std::string dev_proto = has_proto("r2x") ? "r2x" : m.protocols.front();

  CellKey base;
  base.protocol = m.protocols.front();
  base.t_delay = m.t_delays.front();
  base.p_omit = m.p_omits.front();
  base.p_corrupt = m.p_corrupts.front();
  base.team_size = m.team_sizes.front();

  auto at = [&](const std::string& proto) {
    CellKey c = base;
    c.protocol = proto;
    return collect(r, c);
  };

  if (has_proto("ir") && has_proto("r2r")) {
    CellRows ir = at("ir"), r2r = at("r2r");
    if (ir.present() && r2r.present()) {
      // success is a paired binary metric, loss direction flipped
      TrendResult t = paired_less("success/pooling", ir, r2r, metric_success);
      t.effect = r2r.rate() - ir.rate();
      t.detail = "rates " + fmt(ir.rate()) + " -> " + fmt(r2r.rate());
      out.push_back(std::move(t));
      out.push_back(paired_less("path/pooling", r2r, ir, metric_path));
    }
  }
  if (has_proto("r2r") && has_proto("r2x")) {
    CellRows r2r = at("r2r"), r2x = at("r2x");
    if (r2r.present() && r2x.present()) {
      out.push_back(parity("success/device-parity", r2x, r2r, 0.05));
      out.push_back(paired_less("path/device-feeds", r2x, r2r, metric_path));
      out.push_back(paired_less("tokens/device-feeds", r2x, r2r, metric_tokens));
    }
  }

  auto axis_cells = [&](auto&& mutate, std::size_t n) {
    std::vector<CellRows> cells;
    for (std::size_t i = 0; i < n; ++i) {
      CellKey c = base;
      c.protocol = dev_proto;
      mutate(c, i);
      cells.push_back(collect(r, c));
    }
    const bool all = std::all_of(cells.begin(), cells.end(),
                                 [](const CellRows& c) { return c.present(); });
    if (!all) cells.clear();
    return cells;
  };

  if (m.t_delays.size() >= 2) {
    auto cells = axis_cells([&](CellKey& c, std::size_t i) { c.t_delay = m.t_delays[i]; },
                            m.t_delays.size());
    if (!cells.empty())
      out.push_back(monotone("path/latency-monotone", cells, metric_path, +1));
  }
  if (m.p_omits.size() >= 2) {
    auto cells = axis_cells([&](CellKey& c, std::size_t i) { c.p_omit = m.p_omits[i]; },
                            m.p_omits.size());
    if (!cells.empty()) {
      out.push_back(
          paired_less("path/omission-cost", cells.front(), cells.back(), metric_path));
      out.push_back(parity("success/omission-parity", cells.back(), cells.front(), 0.05));
    }
  }
  if (m.p_corrupts.size() >= 2) {
    auto cells = axis_cells([&](CellKey& c, std::size_t i) { c.p_corrupt = m.p_corrupts[i]; },
                            m.p_corrupts.size());
    if (!cells.empty())
      out.push_back(monotone("success/corruption-monotone", cells, metric_success, -1));
  }
  if (m.team_sizes.size() >= 2) {
    auto cells = axis_cells([&](CellKey& c, std::size_t i) { c.team_size = m.team_sizes[i]; },
                            m.team_sizes.size());
    if (!cells.empty()) {
      out.push_back(monotone("path/fleet-monotone", cells, metric_path, +1));
      auto three = std::find(m.team_sizes.begin(), m.team_sizes.end(), 3);
      if (three != m.team_sizes.end()) {
        const CellRows& ref = cells[static_cast<std::size_t>(three - m.team_sizes.begin())];
        TrendResult t;
        t.name = "success/fleet-retention";
        double worst = 1.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (m.team_sizes[i] > 5) continue;
          if (ref.rate() > 0.0) worst = std::min(worst, cells[i].rate() / ref.rate());
        }
        t.effect = worst;
        t.pass = ref.rate() > 0.0 && worst >= 0.9;
        t.detail = "worst retention " + fmt(worst) + " of reference " + fmt(ref.rate());
        out.push_back(std::move(t));
      }
    }
  }

  if (out.empty()) throw InsufficientData("suite covers no registered trend axes");
  return out;
}

}  // namespace r2x
