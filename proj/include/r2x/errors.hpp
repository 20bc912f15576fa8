#pragma once

#include <stdexcept>
#include <string>

namespace r2x {

struct UnknownSourceError : std::runtime_error {
  explicit UnknownSourceError(const std::string& src)
      : std::runtime_error("observation from unregistered source: " + src) {}
};

struct MalformedGoalError : std::runtime_error {
  explicit MalformedGoalError(const std::string& why)
      : std::runtime_error("malformed goal: " + why) {}
};

// Raised when an executor asks ground truth for something that indicates an
// internal bookkeeping bug (not a mere belief/world mismatch).
struct StateMismatchError : std::runtime_error {
  explicit StateMismatchError(const std::string& why)
      : std::runtime_error("state mismatch: " + why) {}
};

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& why) : std::runtime_error("schema error: " + why) {}
};

struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& why)
      : std::runtime_error("transport error: " + why) {}
};

struct GenerationError : std::runtime_error {
  explicit GenerationError(const std::string& why)
      : std::runtime_error("scene generation failed: " + why) {}
};

struct InsufficientData : std::runtime_error {
  explicit InsufficientData(const std::string& why)
      : std::runtime_error("insufficient data: " + why) {}
};

}  // namespace r2x
