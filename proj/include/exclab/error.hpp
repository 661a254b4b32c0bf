#pragma once

#include <stdexcept>
#include <string>

namespace exclab {

/// Bad parameters or inputs violating an operation's precondition.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The requested (kernel, gamma, theta) combination has no implemented theory.
struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Total event rate is zero; the chain cannot leave the current state.
struct AbsorbedState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solver breakdown: singular system, step collapse, missing sign change.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A simulation hit its configured event cap before reaching the horizon.
struct ResourceCapExceeded : std::runtime_error {
  ResourceCapExceeded(const std::string& what, long long events, double reached)
      : std::runtime_error(what), events_done(events), micro_time_reached(reached) {}
  long long events_done;
  double micro_time_reached;
};

}  // namespace exclab
