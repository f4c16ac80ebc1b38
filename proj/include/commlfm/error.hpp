#pragma once

#include <stdexcept>
#include <string>

namespace commlfm {

// Bad or unreadable input data. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Graph ended up with no edges after cleaning.
class EmptyGraphError : public InputError {
 public:
  using InputError::InputError;
};

// Optimization or evaluation failure. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace commlfm
