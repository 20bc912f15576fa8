#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2x/orchestrator.hpp"
#include "r2x/scene_gen.hpp"

namespace r2x {

// One configuration under test. Everything that varies across the ablation
// axes lives here; the scene itself is derived from the seed.
struct CellKey {
  std::string protocol{"r2x"};
  int t_delay{0};
  double p_omit{0.0};
  double p_corrupt{0.0};
  int team_size{3};
  auto operator<=>(const CellKey&) const = default;
};

struct EpisodeRow {
  CellKey cell;
  std::uint64_t seed{0};
  std::string status{"ok"};  // "error:<reason>" episodes keep zeroed metrics
  EpisodeResult result;
};

// Cross product of the axis value lists. Scene and episode settings are the
// shared baseline; team_size, protocol, and the failure knobs are overridden
// per cell.
struct BenchMatrix {
  std::vector<std::string> protocols{"r2x"};
  std::vector<int> t_delays{0};
  std::vector<double> p_omits{0.0};
  std::vector<double> p_corrupts{0.0};
  std::vector<int> team_sizes{3};
  SceneParams scene;
  EpisodeConfig episode;
};

// throws SchemaError on unknown keys or malformed values
BenchMatrix bench_matrix_from_json(const nlohmann::json& j);

struct SuiteResult {
  BenchMatrix matrix;
  int n_seeds{0};
  std::uint64_t first_seed{1};
  std::vector<EpisodeRow> rows;  // cell-major in matrix order, then by seed
};

// Runs every cell against the same seed list so comparisons are paired: the
// scenario for seed s is identical in every cell that shares a team size.
// Episode failures and even scene generation errors land in the row status;
// the suite itself never aborts.
SuiteResult run_suite(const BenchMatrix& m, int n_seeds, int jobs = 1,
                      std::uint64_t first_seed = 1);

// One header line plus one row per episode, byte-stable for a fixed suite.
std::string suite_csv(const SuiteResult& r);

// Per-cell aggregates. success_rate counts errored episodes as failures;
// the metric averages are taken over clean rows only.
nlohmann::ordered_json suite_aggregates(const SuiteResult& r);

struct TrendResult {
  std::string name;
  bool pass{false};
  double p_value{1.0};  // 1.0 for pure threshold trends
  double effect{0.0};
  int pairs{0};
  std::string detail;
};

// Evaluates every registered directional hypothesis whose cells the suite
// covers (pooling gains, latency/omission/corruption response, fleet
// scaling). Throws InsufficientData when none is evaluable.
std::vector<TrendResult> trend_report(const SuiteResult& r);

// One-sided paired sign test: probability of at least `wins` successes in
// wins+losses fair coin flips. Ties must already be dropped.
double sign_test_p(int wins, int losses);

}  // namespace r2x
