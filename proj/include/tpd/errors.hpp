#pragma once

#include <stdexcept>
#include <string>

namespace tpd {

// Invalid or out-of-contract inputs (bad specs, violated preconditions).
struct PreconditionError : std::invalid_argument {
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Iterative solver failed to reach its tolerance (Newton, fixed point,
// grid-refinement gate).
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A root-bracketing search found no root in the admissible interval.
struct NoRootError : std::runtime_error {
  explicit NoRootError(const std::string& what) : std::runtime_error(what) {}
};

// The JPM potential has no interwell barrier at the requested bias.
struct NoBarrierError : std::runtime_error {
  explicit NoBarrierError(const std::string& what) : std::runtime_error(what) {}
};

// Structural problems when assembling operators.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Spectrum does not expose the expected well structure (missing shallow pair,
// no sub-barrier deep state, degenerate anchor element).
struct ClassificationError : std::runtime_error {
  explicit ClassificationError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration parsing/validation problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tpd
