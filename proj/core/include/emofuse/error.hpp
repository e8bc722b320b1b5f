// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace emofuse {

/// Root of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A file exists but its content cannot be parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input in a variant this library does not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Formats "<a> x <b>" for shape diagnostics.
std::string shape_string(long rows, long cols);

}  // namespace emofuse
