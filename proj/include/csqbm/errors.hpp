#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csqbm {

/// Base for all library errors. Callers that only care about "something went
/// wrong in csqbm" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, out-of-range indices, non-finite values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Eigensolver failure or a tolerance violated by a computed quantity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Natural parameters that do not define a normalizable density.
class NonNormalizableError : public Error {
 public:
  NonNormalizableError(std::size_t unit, const std::string& what)
      : Error(what), unit_(unit) {}

  std::size_t unit() const noexcept { return unit_; }

 private:
  std::size_t unit_;
};

/// Environment misuse, e.g. stepping after the episode ended.
class EnvError : public Error {
 public:
  using Error::Error;
};

/// Training aborted by the divergence guard.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Configuration or checkpoint document rejected on load.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace csqbm
