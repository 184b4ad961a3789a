#pragma once

#include <stdexcept>
#include <string>

namespace steepest {

// Base class of every error raised by the library. The subclasses exist so
// callers (and the CLI) can tell a bad input from a failed run.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Block shapes or counts disagree between two operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside an operation's domain (zero vector, non-finite entry, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Post-separation quantity requested while some example has y f(x) <= 0.
class NotSeparatedError : public Error {
 public:
  using Error::Error;
};

// Loss or parameters became non-finite during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Iterative numerical kernel did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed file or unsupported container version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invariant violated during a strict run.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace steepest
