#pragma once

#include <stdexcept>
#include <string>

namespace rflab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Cosine or direction requested for a zero-norm vector.
class UndefinedDirection : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Mixture responsibilities underflowed even in log space.
class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during sampling or training.
class Divergence : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rflab
