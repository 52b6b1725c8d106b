#pragma once

#include <stdexcept>
#include <string>

namespace gsae {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or invalid group structure (bad sizes, bad ranges).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not match the declared group structure.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An iteration failed to converge or to bracket its target.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: divergence guards, divisions by zero norms.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File I/O and format parsing problems.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsae
