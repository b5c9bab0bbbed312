// Error taxonomy shared by all mimocal components. Everything derives from
// std::invalid_argument or std::runtime_error so callers (and the python
// bindings) can stay coarse-grained while tests pin the exact type.
#ifndef MIMOCAL_ERRORS_HPP
#define MIMOCAL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mimocal {

// Operand shape disagreement; message names both shapes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Pilot matrix violates the orthogonality / length contract.
struct PilotError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Scenario descriptor is malformed or missing fields its kind demands.
struct ScenarioError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Cached or paired state does not belong to the arguments it is used with.
struct StateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Data cannot support the requested fit (e.g. an antenna with no energy).
struct DegenerateDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear system too ill-conditioned to solve reliably.
struct IllConditionedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration file or value rejected. `line` is 1-based when known.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what, int line_no = 0)
      : std::runtime_error(what), line(line_no) {}
  int line;
};

// File could not be read, written, or parsed as the expected format.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mimocal

#endif  // MIMOCAL_ERRORS_HPP
