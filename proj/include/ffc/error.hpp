#pragma once

#include <stdexcept>

namespace ffc {

// Base for all input/domain errors the toolkit raises; the CLI maps these to
// exit code 2 (bad input) as opposed to 1 (internal error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ffc
