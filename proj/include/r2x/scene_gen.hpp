#pragma once

#include <cstdint>
#include <string>

#include "r2x/scenario.hpp"

namespace r2x {

// Knobs for procedural scenario generation. Everything downstream is a pure
// function of (params, seed).
struct SceneParams {
  int rooms{4};  // 3..8
  int width{20};
  int height{20};
  double object_density{0.05};  // fraction of cells holding furniture or items
  int team_size{3};             // 2..6
  double coverage{0.5};         // CCTV coverage target
  int camera_budget{12};
  // consolidate | dispose | power_down | fetch; empty lets the seed decide
  std::string task_template;
  Tick relocation_tick{0};  // >0 adds a scripted mid-episode relocation
};

// Throws GenerationError when a placement constraint stays unsatisfiable
// after bounded retries; callers re-seed.
Scenario generate_scene(const SceneParams& p, std::uint64_t seed);

}  // namespace r2x
