#pragma once

#include <stdexcept>
#include <string>

namespace cvselect {

/// Bad arguments or configuration: the caller asked for something ill-formed.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that violates a Dataset invariant (missing cells, bad labels...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed: rank deficiency, divergence, non-convergence.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cvselect
