#pragma once

#include <stdexcept>
#include <string>

namespace dataprobe {

// Base class for all library errors. Subclasses map 1:1 onto the CLI's
// categorized exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument, malformed configuration, or violated precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// An iterative method did not reach its tolerance within its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Candidate search could not produce any usable result.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// File and format errors.
class IoError : public Error {
 public:
  using Error::Error;
};

// Failure while running an intervention contrast.
class ContrastError : public Error {
 public:
  using Error::Error;
};

// A falsification predicate could not be evaluated (missing summary).
class PredicateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dataprobe
