#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "r2x/entities.hpp"
#include "r2x/goal.hpp"
#include "r2x/types.hpp"

namespace r2x {

// Recency key for last-writer-wins fusion. Later sensing tick wins; on a
// tie, robot reports beat device reports; a final tie on the source id
// makes the order total, so fusing any permutation of the same observations
// lands in the same state.
struct WriteKey {
  Tick tau{-1};
  int rank{-1};  // 0 = device, 1 = robot
  SourceId src;
  auto operator<=>(const WriteKey&) const = default;
};

struct ObjectRecord {
  ObjectState state;
  WriteKey key;                                // freshest accepted contribution
  WriteKey spatial_key;                        // guards pos/rec/room as a group
  std::array<WriteKey, kNumProps> prop_keys;   // per-property guards
};

struct BeliefArea {
  AreaState area;
  std::set<Cell> seen;  // cells covered by some robot sweep
};

// One hub's fused world estimate.
struct SemanticState {
  Tick clock{0};
  std::map<RobotId, RobotState> robots;
  std::map<ObjectId, ObjectRecord> objects;
  std::map<AreaId, BeliefArea> areas;
  std::set<SourceId> robot_sources;
  std::set<SourceId> device_sources;

  bool knows_object(const ObjectId& id) const { return objects.count(id) > 0; }
  const ObjectState* object(const ObjectId& id) const {
    auto it = objects.find(id);
    return it == objects.end() ? nullptr : &it->second.state;
  }
  AreaId area_of(const Cell& c) const;
  double explored_fraction(const AreaId& a) const;
};

struct AreaDef {
  AreaId id;
  std::string name;
  std::vector<Cell> cells;
};

SemanticState init_state(const std::vector<RobotState>& robots, const std::vector<AreaDef>& areas,
                         const std::set<SourceId>& robot_sources,
                         const std::set<SourceId>& device_sources);

struct FuseResult {
  int applied{0};        // entries that changed at least one field
  int stale{0};          // entries fully superseded by fresher knowledge
  int dropped_cycle{0};  // entries discarded to keep containment acyclic
  std::vector<ObjectId> changed;     // ids whose observable state changed
  std::vector<ObjectId> discovered;  // ids located for the first time
};

// Merges one observation into the belief. Field-grained last-writer-wins:
// the spatial group and each reported property bit are overwritten exactly
// when the observation's key is >= the field's current key. Unregistered
// sources raise UnknownSourceError. An entry whose containment link would
// create a cycle is dropped whole.
FuseResult fuse(SemanticState& s, const Observation& obs);

// Effect of a successfully executed primitive, applied to the acting hub's
// belief right away (the robot's own sensor sweep confirms it next tick).
void apply_manipulation_effects(SemanticState& s, const RobotId& robot, const ActionStep& step,
                                Tick t);

// Canonical JSON document for prompts, logs and tests. Key order and number
// formatting are fixed; equal states serialize to equal bytes.
std::string serialize_state(const SemanticState& s);

// Inverse of serialize_state for inspection and tests. Provenance keys are
// reconstructed from the stored (src, tau) pairs.
SemanticState parse_state(const std::string& text);

}  // namespace r2x
