#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "r2x/entities.hpp"
#include "r2x/grid_world.hpp"
#include "r2x/rng.hpp"
#include "r2x/types.hpp"

namespace r2x {

struct CameraSpec {
  DeviceId id;
  Cell cell;
  double yaw{0.0};
  int range_cells{12};
  double half_angle_deg{60.0};
  int period{5};
};

// Attached to one stateful object; reports status bits only, no position.
struct ReporterSpec {
  DeviceId id;
  ObjectId attached;
  int period{5};
};

struct FailureProfile {
  int t_delay{0};      // delivery lag in ticks, sensing stamp is preserved
  double p_omit{0.0};  // per-entry drop probability
  double p_corrupt{0.0};  // per observed bit flip probability
};

Observation emit_camera(const GridWorld& w, const CameraSpec& cam, Tick t);
Observation emit_reporter(const GridWorld& w, const ReporterSpec& rep, Tick t);

// Applies omission then corruption, consuming the failure stream in entry
// order and bit index order. The sensing stamp tau is never rewritten.
Observation degrade(Observation obs, const FailureProfile& f, Rng& rng);

// Network between sources and hubs: observations become available at their
// delivery tick, in enqueue order within a tick.
class DeliveryQueue {
 public:
  void push(Observation obs, Tick delivery_tick);
  std::vector<Observation> pop_due(Tick now);
  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }

 private:
  std::map<std::pair<Tick, std::uint64_t>, Observation> q_;
  std::uint64_t seq_{0};
};

struct CoverageReport {
  double fraction{0.0};
  int cameras{0};
  bool feasible{false};  // reached the target band within budget
};

// Greedy camera placement over wall-adjacent cells and eight headings.
// Stops once coverage lands within +/-0.05 of the target; prefers, when the
// best marginal step would overshoot past the band, a candidate that lands
// inside it. Deterministic: ties break on (cell.y, cell.x, yaw).
std::vector<CameraSpec> place_cameras(const GridWorld& w, double target, int budget,
                                      int range_cells, double half_angle_deg, int period,
                                      CoverageReport* report = nullptr);

}  // namespace r2x
