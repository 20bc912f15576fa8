#include "r2x/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace r2x {

Observation emit_camera(const GridWorld& w, const CameraSpec& cam, Tick t) {
  Observation obs;
  obs.src = cam.id;
  obs.tau = t;
  auto cells = visible_cells(w, cam.cell, cam.yaw, cam.half_angle_deg, cam.range_cells);
  std::set<Cell> vis(cells.begin(), cells.end());
  for (const auto& [id, o] : w.objects) {
    if (!o.pos || !vis.count(*o.pos)) continue;
    if (!directly_reachable(w, id)) continue;
    ObsEntry e;
    e.id = id;
    e.type = o.type;
    e.has_spatial = true;
    e.pos = *o.pos;
    e.rec = o.rec;
    e.room = o.room;
    const ObjectClass* cls = find_class(o.type);
    e.observed = cls ? cls->applicable : static_cast<PropMask>(0);
    e.props = o.props;
    obs.entries.push_back(std::move(e));
  }
  return obs;
}

Observation emit_reporter(const GridWorld& w, const ReporterSpec& rep, Tick t) {
  Observation obs;
  obs.src = rep.id;
  obs.tau = t;
  auto it = w.objects.find(rep.attached);
  if (it == w.objects.end()) return obs;
  const ObjectState& o = it->second;
  const ObjectClass* cls = find_class(o.type);
  const PropMask reportable =
      static_cast<PropMask>((prop_bit(kIsToggled) | prop_bit(kIsOpen)) &
                            (cls ? cls->applicable : 0));
  if (!reportable) return obs;
  ObsEntry e;
  e.id = o.id;
  e.type = o.type;
  e.observed = reportable;
  for (int i = 0; i < kNumProps; ++i) {
    if (reportable & prop_bit(i)) e.props.set(i, o.props.get(i));
  }
  obs.entries.push_back(std::move(e));
  return obs;
}

Observation degrade(Observation obs, const FailureProfile& f, Rng& rng) {
  std::vector<ObsEntry> kept;
  kept.reserve(obs.entries.size());
  for (ObsEntry& e : obs.entries) {
    if (rng.bernoulli(f.p_omit)) continue;
    const ObjectClass* cls = find_class(e.type);
    const PropMask mask =
        static_cast<PropMask>(e.observed & (cls ? cls->applicable : static_cast<PropMask>(0x3f)));
    for (int i = 0; i < kNumProps; ++i) {
      if ((mask & prop_bit(i)) && rng.bernoulli(f.p_corrupt)) {
        e.props.set(i, e.props.get(i) ? 0 : 1);
      }
    }
    kept.push_back(std::move(e));
  }
  obs.entries = std::move(kept);
  return obs;
}

void DeliveryQueue::push(Observation obs, Tick delivery_tick) {
  q_.emplace(std::make_pair(delivery_tick, seq_++), std::move(obs));
}

std::vector<Observation> DeliveryQueue::pop_due(Tick now) {
  std::vector<Observation> out;
  auto it = q_.begin();
  while (it != q_.end() && it->first.first <= now) {
    out.push_back(std::move(it->second));
    it = q_.erase(it);
  }
  return out;
}

std::vector<CameraSpec> place_cameras(const GridWorld& w, double target, int budget,
                                      int range_cells, double half_angle_deg, int period,
                                      CoverageReport* report) {
  struct Candidate {
    Cell cell;
    double yaw;
    std::set<Cell> vis;
  };
  // Wall-adjacent cells only (borders count); cameras sit against walls.
  std::vector<Candidate> candidates;
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      Cell c{x, y};
      bool against_wall = false;
      const Cell nbrs[4] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const Cell& n : nbrs) {
        if (!w.in_bounds(n) || w.walls.blocked(c, n)) against_wall = true;
      }
      if (!against_wall) continue;
      for (int k = 0; k < 8; ++k) {
        Candidate cand{c, 45.0 * k, {}};
        auto cells = visible_cells(w, c, cand.yaw, half_angle_deg, range_cells);
        cand.vis.insert(cells.begin(), cells.end());
        candidates.push_back(std::move(cand));
      }
    }
  }

  const double total = static_cast<double>(w.width) * w.height;
  std::set<Cell> covered;
  std::vector<CameraSpec> placed;
  const double lo = target - 0.05, hi = target + 0.05;

  while (static_cast<int>(placed.size()) < budget) {
    double cov = static_cast<double>(covered.size()) / total;
    if (cov >= lo) break;
    // best marginal gain; on a tie the earliest (y, x, yaw) candidate wins
    std::size_t best = candidates.size();
    std::size_t in_band = candidates.size();
    double in_band_dist = 1e9;
    std::size_t best_gain = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      std::size_t gain = 0;
      for (const Cell& c : candidates[i].vis) {
        if (!covered.count(c)) ++gain;
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
      double after = (static_cast<double>(covered.size()) + static_cast<double>(gain)) / total;
      if (gain > 0 && after >= lo && after <= hi) {
        double dist = std::fabs(after - target);
        if (dist < in_band_dist - 1e-12) {
          in_band_dist = dist;
          in_band = i;
        }
      }
    }
    if (best_gain == 0) break;
    double best_after = (static_cast<double>(covered.size()) + static_cast<double>(best_gain)) / total;
    std::size_t pick = best;
    if (best_after > hi && in_band < candidates.size()) pick = in_band;
    const Candidate& c = candidates[pick];
    CameraSpec spec;
    spec.id = "cam_" + std::to_string(placed.size() + 1);
    spec.cell = c.cell;
    spec.yaw = c.yaw;
    spec.range_cells = range_cells;
    spec.half_angle_deg = half_angle_deg;
    spec.period = period;
    placed.push_back(spec);
    covered.insert(c.vis.begin(), c.vis.end());
  }

  if (report) {
    report->fraction = static_cast<double>(covered.size()) / total;
    report->cameras = static_cast<int>(placed.size());
    report->feasible = report->fraction >= lo;
  }
  return placed;
}

}  // namespace r2x
