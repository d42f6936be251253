#pragma once

#include <stdexcept>
#include <string>

namespace servobench {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// |x| or |y| left the representable workspace during integration.
struct SimulationDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedConfiguration : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct StaleTrack : std::logic_error {
  using std::logic_error::logic_error;
};

struct InsufficientData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace servobench
