#pragma once

#include <stdexcept>
#include <string>

namespace feedergen {

struct FeederError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : FeederError {
  using FeederError::FeederError;
};
struct SchemaError : FeederError {
  using FeederError::FeederError;
};
struct EmptyGraphError : FeederError {
  using FeederError::FeederError;
};
struct GeometryError : FeederError {
  using FeederError::FeederError;
};
struct EmptyCellError : FeederError {
  using FeederError::FeederError;
};
struct DisconnectedError : FeederError {
  using FeederError::FeederError;
};
struct NotRadialError : FeederError {
  using FeederError::FeederError;
};
struct NoLoadNodesError : FeederError {
  using FeederError::FeederError;
};
struct DegenerateAllocationError : FeederError {
  using FeederError::FeederError;
};
struct CapacityExceededError : FeederError {
  using FeederError::FeederError;
};
struct VoltageCollapseError : FeederError {
  using FeederError::FeederError;
};
struct ExhaustedError : FeederError {
  using FeederError::FeederError;
};
struct IncompleteModelError : FeederError {
  using FeederError::FeederError;
};
struct ConfigError : FeederError {
  using FeederError::FeederError;
};

}  // namespace feedergen
