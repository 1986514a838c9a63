#pragma once

#include <stdexcept>
#include <string>

namespace unmix3d {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of the arguments disagree (N != H*W, P mismatch, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A parameter is outside its documented range, or a configuration cannot be
// realized (e.g. no depth padding satisfies the stride equation).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file was readable but its contents violate the format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Rank deficiency, near-zero normalizers, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace unmix3d
