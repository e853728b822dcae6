#pragma once

#include <stdexcept>
#include <string>

namespace jknet {

// Base for failures raised by the numerical layers. Argument errors use
// std::invalid_argument / std::out_of_range directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "non_convergence"; }
};

class IntegrationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "integration"; }
};

class CyclicInputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "cyclic_input"; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

}  // namespace jknet
