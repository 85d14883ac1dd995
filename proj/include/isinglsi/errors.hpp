#pragma once

#include <stdexcept>
#include <string>

namespace isinglsi {

/// Bad user input: malformed model, parameters outside their domain, size caps.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine failed to reach its stated accuracy.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// A verified inequality or identity did not hold.
class VerificationFailure : public std::runtime_error {
 public:
  explicit VerificationFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace isinglsi
