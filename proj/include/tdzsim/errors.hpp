#pragma once

#include <stdexcept>
#include <string>

namespace tdzsim {

// A setup that cannot describe a runnable simulation (CLI exit code 2).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Linear solve failed or produced an untrustworthy result.
struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

// Counts that cannot be turned into a phasor (saturated or contradictory).
struct demod_error : std::runtime_error {
  explicit demod_error(const std::string& what) : std::runtime_error(what) {}
};

// File could not be read or written (CLI exit code 3).
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tdzsim
