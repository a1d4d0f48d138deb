#pragma once

#include <stdexcept>
#include <string>

namespace heis {

// Bad arguments or preconditions. The CLI maps this to exit code 1.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integrator, quadrature or root-finder did not deliver. Exit code 2.
class numerical_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heis
