#pragma once

#include <stdexcept>
#include <string>

namespace otflow {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (bad shape, bad parameter, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver did not reach its tolerance, or a positivity floor was hit.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace otflow
