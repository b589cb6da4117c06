#pragma once

#include <stdexcept>
#include <string>

namespace qst {

// Error classes mirror the CLI exit-code contract:
//   input_error -> 2, generation_error -> 3, numerical_error -> 4.

struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct generation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace qst
