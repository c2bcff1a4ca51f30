#pragma once

#include <stdexcept>
#include <string>

namespace topictrend {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input or violated precondition (bad range, missing column, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Degenerate or non-finite numerics: singular design, zero variance,
/// non-finite objective.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File system and parse failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace topictrend
