#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace r2x {

using Tick = std::int64_t;

using RobotId = std::string;
using ObjectId = std::string;
using AreaId = std::string;
using DeviceId = std::string;
using SourceId = std::string;

struct Cell {
  int x{0};
  int y{0};
  auto operator<=>(const Cell&) const = default;
};

inline int chebyshev(const Cell& a, const Cell& b) {
  int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

inline int manhattan(const Cell& a, const Cell& b) {
  int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

// Discrete pose. Robots sit at cell centers; offsets are kept for the wire
// format but are always zero in this implementation.
struct Pose {
  Cell cell;
  double theta{0.0};  // yaw, degrees in [0, 360)
  double phi{0.0};    // sensor pitch, degrees
  auto operator<=>(const Pose&) const = default;
};

inline double normalize_deg(double a) {
  while (a < 0.0) a += 360.0;
  while (a >= 360.0) a -= 360.0;
  return a;
}

enum class ActionKind {
  MoveStep,
  Rotate,
  Pickup,
  Put,
  Open,
  Close,
  ToggleOn,
  ToggleOff,
  Slice,
  Scan,
};

const char* to_string(ActionKind k);
std::optional<ActionKind> action_kind_from_string(const std::string& s);

using SkillSet = std::set<ActionKind>;

// Binary object properties, fixed order. The order is part of the wire
// format, do not reorder.
enum Prop : int {
  kIsOpen = 0,
  kIsToggled = 1,
  kIsBroken = 2,
  kIsSliced = 3,
  kIsDirty = 4,
  kIsFilled = 5,
};

inline constexpr int kNumProps = 6;

extern const std::array<const char*, kNumProps> kPropNames;

using PropMask = std::uint8_t;  // bit i set = property i is meant

inline constexpr PropMask prop_bit(int i) { return static_cast<PropMask>(1u << i); }

struct PropertyVector {
  std::array<std::uint8_t, kNumProps> v{};  // each 0 or 1
  auto operator<=>(const PropertyVector&) const = default;

  std::uint8_t get(int i) const { return v[static_cast<std::size_t>(i)]; }
  void set(int i, std::uint8_t val) { v[static_cast<std::size_t>(i)] = val; }
};

// Static per-class facts: which properties apply and what the class can do.
struct ObjectClass {
  std::string name;
  PropMask applicable{0};
  bool receptacle{false};
  bool openable{false};
  bool toggleable{false};
  bool sliceable{false};
  bool pickupable{false};
  bool perishable{false};
};

// Lookup by class name ("Fridge", "Apple", ...). Returns nullptr when the
// class is unknown.
const ObjectClass* find_class(const std::string& name);
const std::vector<ObjectClass>& all_classes();

}  // namespace r2x
