#pragma once

#include <stdexcept>
#include <string>

namespace spwells {

// Invalid inputs: bad grid, bad geometry, bad parameters, bad config.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two fields or masks living on different grids.
class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("fields are defined on different grids") {}
};

// A Nehari component vanished (the u_j != 0 requirement failed).
class ComponentCollapse : public std::runtime_error {
 public:
  ComponentCollapse(std::size_t component, const std::string& detail)
      : std::runtime_error("component collapse in component " + std::to_string(component) +
                           ": " + detail),
        component_(component) {}
  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

// An iterative method failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spwells
