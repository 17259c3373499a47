#pragma once

#include <stdexcept>
#include <string>

namespace zlab {

// Bad arguments or violated preconditions. Maps to CLI exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configured memory or enumeration cap would be exceeded. Exit code 2.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver failed to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zlab
