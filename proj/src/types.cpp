#include "r2x/types.hpp"

#include <map>

#include "r2x/entities.hpp"

namespace r2x {

const char* to_string(RobotStatus s) {
  switch (s) {
    case RobotStatus::IDLE: return "IDLE";
    case RobotStatus::EXECUTING: return "EXECUTING";
    case RobotStatus::CANCELING: return "CANCELING";
  }
  return "?";
}

const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::MoveStep: return "MoveStep";
    case ActionKind::Rotate: return "Rotate";
    case ActionKind::Pickup: return "Pickup";
    case ActionKind::Put: return "Put";
    case ActionKind::Open: return "Open";
    case ActionKind::Close: return "Close";
    case ActionKind::ToggleOn: return "ToggleOn";
    case ActionKind::ToggleOff: return "ToggleOff";
    case ActionKind::Slice: return "Slice";
    case ActionKind::Scan: return "Scan";
  }
  return "?";
}

std::optional<ActionKind> action_kind_from_string(const std::string& s) {
  static const std::map<std::string, ActionKind> m = {
      {"MoveStep", ActionKind::MoveStep}, {"Rotate", ActionKind::Rotate},
      {"Pickup", ActionKind::Pickup},     {"Put", ActionKind::Put},
      {"Open", ActionKind::Open},         {"Close", ActionKind::Close},
      {"ToggleOn", ActionKind::ToggleOn}, {"ToggleOff", ActionKind::ToggleOff},
      {"Slice", ActionKind::Slice},       {"Scan", ActionKind::Scan},
  };
  auto it = m.find(s);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

const std::array<const char*, kNumProps> kPropNames = {
    "isOpen", "isToggled", "isBroken", "isSliced", "isDirty", "isFilled",
};

namespace {

constexpr PropMask OPEN = prop_bit(kIsOpen);
constexpr PropMask TOGGLED = prop_bit(kIsToggled);
constexpr PropMask BROKEN = prop_bit(kIsBroken);
constexpr PropMask SLICED = prop_bit(kIsSliced);
constexpr PropMask DIRTY = prop_bit(kIsDirty);
constexpr PropMask FILLED = prop_bit(kIsFilled);

std::vector<ObjectClass> make_classes() {
  std::vector<ObjectClass> cs;
  auto add = [&cs](std::string name, PropMask mask, bool rec, bool open, bool tog, bool sl,
                   bool pick, bool perish) {
    cs.push_back(ObjectClass{std::move(name), mask, rec, open, tog, sl, pick, perish});
  };
  // name, applicable, receptacle, openable, toggleable, sliceable, pickupable, perishable
  add("Fridge", OPEN | TOGGLED | BROKEN | DIRTY, true, true, true, false, false, false);
  add("Cabinet", OPEN | DIRTY, true, true, false, false, false, false);
  add("Drawer", OPEN | DIRTY, true, true, false, false, false, false);
  add("Microwave", OPEN | TOGGLED | BROKEN | DIRTY, true, true, true, false, false, false);
  add("GarbageCan", FILLED | DIRTY, true, false, false, false, false, false);
  add("Table", DIRTY, true, false, false, false, false, false);
  add("CounterTop", DIRTY, true, false, false, false, false, false);
  add("Shelf", DIRTY, true, false, false, false, false, false);
  add("Sink", FILLED | DIRTY, true, false, false, false, false, false);
  add("Box", OPEN | DIRTY, true, true, false, false, true, false);
  add("TV", TOGGLED | BROKEN, false, false, true, false, false, false);
  add("Lamp", TOGGLED | BROKEN, false, false, true, false, false, false);
  add("Laptop", OPEN | TOGGLED | BROKEN, false, true, true, false, true, false);
  add("Radio", TOGGLED | BROKEN, false, false, true, false, true, false);
  add("Apple", SLICED | DIRTY, false, false, false, true, true, true);
  add("Tomato", SLICED | DIRTY, false, false, false, true, true, true);
  add("Potato", SLICED | DIRTY, false, false, false, true, true, true);
  add("Bread", SLICED | DIRTY, false, false, false, true, true, true);
  add("Lettuce", SLICED | DIRTY, false, false, false, true, true, true);
  add("Egg", BROKEN | SLICED, false, false, false, true, true, true);
  add("Knife", DIRTY, false, false, false, false, true, false);
  add("Cup", FILLED | DIRTY | BROKEN, false, false, false, false, true, false);
  add("Plate", DIRTY | BROKEN, false, false, false, false, true, false);
  add("Bowl", FILLED | DIRTY | BROKEN, false, false, false, false, true, false);
  add("Book", OPEN | DIRTY, false, true, false, false, true, false);
  add("Keys", 0, false, false, false, false, true, false);
  add("RemoteControl", BROKEN, false, false, false, false, true, false);
  add("SoapBottle", FILLED, false, false, false, false, true, false);
  add("Cloth", DIRTY, false, false, false, false, true, false);
  add("Vase", BROKEN | FILLED | DIRTY, false, false, false, false, true, false);
  return cs;
}

}  // namespace

const std::vector<ObjectClass>& all_classes() {
  static const std::vector<ObjectClass> cs = make_classes();
  return cs;
}

const ObjectClass* find_class(const std::string& name) {
  for (const auto& c : all_classes()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace r2x
