#pragma once

#include <stdexcept>
#include <string>

namespace fieldpipe {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad XML, inconsistent graph, wrong quantity shape.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File system or file format failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical or runtime failure inside a filter.
class FilterError : public Error {
 public:
  using Error::Error;
};

}  // namespace fieldpipe
