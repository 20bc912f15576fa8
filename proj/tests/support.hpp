#pragma once

#include <set>
#include <string>
#include <vector>

#include "r2x/grid_world.hpp"
#include "r2x/rng.hpp"
#include "r2x/semantic_state.hpp"

namespace r2x::test {

// One rectangular room spanning the whole grid, no interior walls.
GridWorld open_world(int w, int h);

// 6x6 world split into two 3x6 rooms by a wall at x=2|3 with a single door
// at y=1. Used by several hand-traced fixtures.
GridWorld two_rooms();

SkillSet all_skills();

RobotState& put_robot(GridWorld& w, const RobotId& id, Cell c, double theta = 0.0,
                      RobotStatus sigma = RobotStatus::EXECUTING);

ObjectState& put_object(GridWorld& w, const ObjectId& id, const std::string& type, Cell c);

// Random interior walls with guaranteed full connectivity (walls that would
// disconnect the grid are skipped).
void sprinkle_walls(GridWorld& w, Rng& rng, int attempts);

bool grid_connected(const GridWorld& w);

// Brute-force reference for line_of_sight: walks the sight segment on the
// doubled lattice event by event (a DDA march), maintaining the current
// cell. Shares only the rule description with the production code, not the
// scan structure.
bool los_oracle(const WallSet& walls, const Cell& a, const Cell& b);

// Reference BFS distance map (plain Dijkstra-style relaxation, no parent
// tricks). -1 where unreachable.
std::vector<int> bfs_distances(const GridWorld& w, const Cell& from);

SemanticState belief_for(const GridWorld& w, const std::set<SourceId>& robot_srcs,
                         const std::set<SourceId>& device_srcs);

// belief_for plus a record for every ground-truth object, for tests that
// are not about discovery.
SemanticState known_state(const GridWorld& w);

// Minimal stand-in for the orchestrator's sensing phase: the robot's field
// of view becomes part of the per-area seen sets.
void sense_into(const GridWorld& w, SemanticState& b, const RobotId& robot);

}  // namespace r2x::test
