#pragma once

#include <stdexcept>
#include <string>

namespace matchci {

// Malformed input files / unparseable values. CLI maps this to exit code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated preconditions or inconsistent configuration. CLI exit code 3.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resampling could not produce a usable replicate. CLI exit code 4.
struct ResamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace matchci
