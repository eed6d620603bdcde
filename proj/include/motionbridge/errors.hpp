#pragma once

#include <stdexcept>
#include <string>

namespace motionbridge {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two inputs disagree on a size (joint count, matrix shape).
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Parent array is not a valid topologically sorted tree.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Sinkhorn kernel or scalings left the finite range.
class NumericOverflow : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

/// Malformed document text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed document whose fields are inconsistent.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFeature : public Error {
 public:
  using Error::Error;
};

}  // namespace motionbridge
